#include "fqs/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fqs/error.hpp"
#include "fqs/text_format.hpp"

namespace fqs {

namespace {

struct Value {
  enum class Kind { Number, Bool, Word, String, List } kind = Kind::Number;
  double number = 0.0;
  bool integral = false;
  bool flag = false;
  std::string text;
  std::vector<Value> items;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

class ValueParser {
 public:
  ValueParser(std::string_view s, int line) : s_(s), line_(line) {}

  Value parse_all() {
    Value v = parse();
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    const char c = s_[pos_];
    if (c == '[') return parse_list();
    if (c == '"') return parse_string();
    return parse_scalar();
  }

  Value parse_list() {
    Value v;
    v.kind = Value::Kind::List;
    ++pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(parse());
      skip_ws();
      if (pos_ >= s_.size()) fail(line_, "unterminated list");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail(line_, std::string("expected ',' or ']' in list, found '") + s_[pos_] + "'");
    }
  }

  Value parse_string() {
    Value v;
    v.kind = Value::Kind::String;
    ++pos_;
    while (pos_ < s_.size() && s_[pos_] != '"') v.text += s_[pos_++];
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return v;
  }

  Value parse_scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string tok(s_.substr(start, pos_ - start));
    Value v;
    if (tok == "true" || tok == "false") {
      v.kind = Value::Kind::Bool;
      v.flag = tok == "true";
      return v;
    }
    double d = 0.0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    const char* first = (b != e && *b == '+') ? b + 1 : b;
    auto [ptr, ec] = std::from_chars(first, e, d);
    if (ec == std::errc() && ptr == e) {
      v.kind = Value::Kind::Number;
      v.number = d;
      v.integral = tok.find_first_of(".eE") == std::string::npos;
      return v;
    }
    if (tok.empty() || !(std::isalpha(static_cast<unsigned char>(tok[0])) || tok[0] == '_'))
      fail(line_, "cannot read value '" + tok + "'");
    v.kind = Value::Kind::Word;
    v.text = tok;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int bracket_depth(const std::string& s) {
  int d = 0;
  bool in_str = false;
  for (char c : s) {
    if (c == '"') in_str = !in_str;
    if (in_str) continue;
    if (c == '[') ++d;
    if (c == ']') --d;
  }
  return d;
}

struct Entry {
  Value value;
  int line;
};

std::map<std::string, Entry> tokenize(std::string_view text) {
  std::map<std::string, Entry> out;
  std::istringstream in{std::string(text)};
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "missing key");
    std::string value = trim(line.substr(eq + 1));
    const int start_line = line_no;
    while (bracket_depth(value) > 0) {
      if (!std::getline(in, raw)) fail(start_line, "unterminated list for '" + key + "'");
      ++line_no;
      value += " " + trim(strip_comment(raw));
    }
    const std::string path = section.empty() ? key : section + "." + key;
    if (out.count(path)) fail(line_no, "duplicate key '" + path + "'");
    out.emplace(path, Entry{ValueParser(value, start_line).parse_all(), start_line});
  }
  return out;
}

class Binder {
 public:
  explicit Binder(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  [[noreturn]] void error(const std::string& key, const std::string& msg) const {
    auto it = entries_.find(key);
    if (it != entries_.end()) fail(it->second.line, key + ": " + msg);
    throw Error(ErrorKind::Parse, key + ": " + msg);
  }

  const Value* get(const std::string& key, bool required = false) {
    used_.insert(key);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (required) throw Error(ErrorKind::Parse, "missing required key '" + key + "'");
      return nullptr;
    }
    return &it->second.value;
  }

  double number(const Value& v, const std::string& key) const {
    if (v.kind != Value::Kind::Number) error(key, "expected a number");
    if (!std::isfinite(v.number)) error(key, "expected a finite number");
    return v.number;
  }

  void num(const std::string& key, double& out, bool required = false) {
    if (const Value* v = get(key, required)) out = number(*v, key);
  }

  void integer(const std::string& key, int& out) {
    if (const Value* v = get(key)) {
      if (v->kind != Value::Kind::Number || !v->integral) error(key, "expected an integer");
      out = static_cast<int>(v->number);
    }
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (const Value* v = get(key)) {
      if (v->kind != Value::Kind::Number || !v->integral || v->number < 0) error(key, "expected a nonnegative integer");
      out = static_cast<std::uint64_t>(v->number);
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const Value* v = get(key)) {
      if (v->kind != Value::Kind::Bool) error(key, "expected true or false");
      out = v->flag;
    }
  }

  void word(const std::string& key, std::string& out) {
    if (const Value* v = get(key)) {
      if (v->kind != Value::Kind::Word && v->kind != Value::Kind::String) error(key, "expected a name");
      out = v->text;
    }
  }

  std::vector<double> numbers(const Value& v, const std::string& key) const {
    if (v.kind != Value::Kind::List) error(key, "expected a list of numbers");
    std::vector<double> out;
    for (const Value& x : v.items) out.push_back(number(x, key));
    return out;
  }

  void triples(const std::string& key, std::vector<std::array<double, 3>>& out, bool required = false) {
    const Value* v = get(key, required);
    if (!v) return;
    if (v->kind != Value::Kind::List || v->items.empty()) error(key, "expected a list of [a, b, c] triples");
    out.clear();
    for (const Value& x : v->items) {
      const auto t = numbers(x, key);
      if (t.size() != 3) error(key, "each component needs exactly three coefficients [a, b, c]");
      out.push_back({t[0], t[1], t[2]});
    }
  }

  void pairs(const std::string& key, std::vector<std::pair<double, double>>& out, bool required = false) {
    const Value* v = get(key, required);
    if (!v) return;
    if (v->kind != Value::Kind::List) error(key, "expected a list of [t, r] pairs");
    out.clear();
    for (const Value& x : v->items) {
      const auto p = numbers(x, key);
      if (p.size() != 2) error(key, "each knot needs exactly two numbers [t, r]");
      out.emplace_back(p[0], p[1]);
    }
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) fail(entry.line, "unknown key '" + key + "'");
  }

  const Value* peek(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second.value;
  }

 private:
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

Side side_from(const std::string& s, const Binder& b, const std::string& key) {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  if (s == "bottom") return Side::Bottom;
  if (s == "top") return Side::Top;
  b.error(key, "unknown side '" + s + "' (left, right, bottom, top)");
}

const char* side_name(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "?";
}

template <class F>
void checked(const Binder& b, const std::string& key, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    b.error(key, e.what());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  Binder b(tokenize(text));
  RunConfig c;

  b.word("w.form", c.w.form);
  b.num("w.p", c.w.p);
  b.num("w.coefficient", c.w.coefficient);
  b.num("w.growth_c", c.w.growth_c);
  if (b.peek("w.p") && !(c.w.p > 1.0)) b.error("w.p", "exponent must exceed 1");
  checked(b, "w", [&] { (void)EnergyDensity::from_name(c.w.form, c.w.p, c.w.coefficient, c.w.growth_c); });

  b.word("mesh.kind", c.mesh.kind);
  if (c.mesh.kind != "bar" && c.mesh.kind != "rect") b.error("mesh.kind", "expected bar or rect");
  b.num("mesh.length", c.mesh.length);
  b.num("mesh.width", c.mesh.width);
  b.num("mesh.height", c.mesh.height);
  b.num("mesh.h", c.mesh.h, true);
  if (!(c.mesh.h > 0.0)) b.error("mesh.h", "must be positive");
  b.num("mesh.kappa", c.mesh.kappa);
  if (!(c.mesh.kappa > 0.0)) b.error("mesh.kappa", "must be positive");
  if (const Value* v = b.get("mesh.notch")) {
    c.mesh.notch = b.numbers(*v, "mesh.notch");
    const std::size_t want = c.mesh.kind == "bar" ? 1 : 4;
    if (c.mesh.notch.size() != want)
      b.error("mesh.notch", c.mesh.kind == "bar" ? "expected [x]" : "expected [x0, y0, x1, y1]");
  }
  if (const Value* v = b.get("mesh.dirichlet")) {
    if (v->kind != Value::Kind::List) b.error("mesh.dirichlet", "expected a list of sides");
    for (const Value& s : v->items) {
      if (s.kind != Value::Kind::Word && s.kind != Value::Kind::String) b.error("mesh.dirichlet", "expected side names");
      c.mesh.dirichlet.push_back(side_from(s.text, b, "mesh.dirichlet"));
    }
  } else if (c.mesh.kind == "bar") {
    c.mesh.dirichlet = {Side::Left, Side::Right};
  } else {
    c.mesh.dirichlet = {Side::Left, Side::Right, Side::Bottom, Side::Top};
  }
  std::string breakable = "all";
  b.word("mesh.breakable", breakable);
  if (breakable == "all") c.mesh.breakable = BreakableSet::All;
  else if (breakable == "notch-line") c.mesh.breakable = BreakableSet::NotchLine;
  else b.error("mesh.breakable", "expected all or notch-line");
  b.boolean("mesh.refine", c.mesh.refine);

  b.triples("load.profile", c.load.profile, true);
  b.triples("load.offset", c.load.offset);
  if (c.load.offset.empty()) c.load.offset.assign(c.load.profile.size(), {0.0, 0.0, 0.0});
  if (c.load.offset.size() != c.load.profile.size())
    b.error("load.offset", "needs one triple per profile component");
  b.pairs("load.schedule", c.load.schedule, true);
  checked(b, "load.schedule", [&] { (void)Schedule(c.load.schedule); });
  b.num("load.horizon", c.load.horizon, true);
  if (!(c.load.horizon > 0.0)) b.error("load.horizon", "must be positive");

  std::string backend = "exact";
  b.word("solver.backend", backend);
  if (backend == "exact") c.solver.backend = Backend::Exact;
  else if (backend == "altmin") c.solver.backend = Backend::AltMin;
  else b.error("solver.backend", "expected exact or altmin");
  b.num("solver.tolerance", c.solver.tolerance);
  if (!(c.solver.tolerance > 0.0)) b.error("solver.tolerance", "must be positive");
  b.num("solver.linear_tolerance", c.solver.linear_tolerance);
  if (!(c.solver.linear_tolerance > 0.0)) b.error("solver.linear_tolerance", "must be positive");
  b.integer("solver.budget", c.solver.budget);
  if (c.solver.budget < 0) b.error("solver.budget", "must be nonnegative");
  b.integer("solver.max_iterations", c.solver.max_iterations);
  if (c.solver.max_iterations < 1) b.error("solver.max_iterations", "must be at least 1");
  b.num("solver.at_epsilon_over_h", c.solver.at_epsilon_over_h);
  if (!(c.solver.at_epsilon_over_h > 0.0)) b.error("solver.at_epsilon_over_h", "must be positive");
  b.num("solver.at_eta", c.solver.at_eta);
  if (c.solver.at_eta < 0.0) b.error("solver.at_eta", "must be nonnegative");
  b.num("solver.threshold", c.solver.threshold);
  if (!(c.solver.threshold > 0.0 && c.solver.threshold < 1.0)) b.error("solver.threshold", "must lie in (0, 1)");
  b.integer("solver.seed_stride", c.solver.seed_stride);
  if (c.solver.seed_stride < 1) b.error("solver.seed_stride", "must be at least 1");
  b.boolean("solver.truncate", c.solver.truncate);
  if (c.solver.truncate && c.load.profile.size() != 1)
    b.error("solver.truncate", "truncation applies to scalar problems only");

  b.num("time.T", c.time.T, true);
  b.num("time.delta", c.time.delta, true);
  b.integer("time.levels", c.time.levels);
  if (!(c.time.T > 0.0)) b.error("time.T", "must be positive");
  if (c.time.T > c.load.horizon) b.error("time.T", "exceeds load.horizon");
  if (!(c.time.delta > 0.0) || c.time.delta > c.time.T) b.error("time.delta", "must lie in (0, T]");
  {
    const double steps = c.time.T / c.time.delta;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) b.error("time.delta", "must divide T into whole steps");
  }
  if (c.time.levels < 1) b.error("time.levels", "must be at least 1");

  b.word("output.directory", c.output.directory);
  b.integer("output.snapshot_every", c.output.snapshot_every);
  if (c.output.snapshot_every < 0) b.error("output.snapshot_every", "must be nonnegative");
  b.integer("output.checkpoint_every", c.output.checkpoint_every);
  if (c.output.checkpoint_every < 0) b.error("output.checkpoint_every", "must be nonnegative");
  b.u64("seed", c.seed);

  b.reject_unknown();
  checked(b, "mesh", [&] { (void)build_problem(c, 0); });
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  auto num = [](double d) { return format_double(d); };
  auto triples = [&](const std::vector<std::array<double, 3>>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? ", [" : "[") + num(v[i][0]) + ", " + num(v[i][1]) + ", " + num(v[i][2]) + "]";
    return s + "]";
  };
  o << "seed = " << c.seed << "\n\n[w]\nform = \"" << c.w.form << "\"\np = " << num(c.w.p)
    << "\ncoefficient = " << num(c.w.coefficient) << "\ngrowth_c = " << num(c.w.growth_c) << "\n\n";
  o << "[mesh]\nkind = \"" << c.mesh.kind << "\"\nlength = " << num(c.mesh.length) << "\nwidth = " << num(c.mesh.width)
    << "\nheight = " << num(c.mesh.height) << "\nh = " << num(c.mesh.h) << "\nkappa = " << num(c.mesh.kappa) << "\n";
  if (!c.mesh.notch.empty()) {
    o << "notch = [";
    for (std::size_t i = 0; i < c.mesh.notch.size(); ++i) o << (i ? ", " : "") << num(c.mesh.notch[i]);
    o << "]\n";
  }
  o << "dirichlet = [";
  for (std::size_t i = 0; i < c.mesh.dirichlet.size(); ++i) o << (i ? ", " : "") << side_name(c.mesh.dirichlet[i]);
  o << "]\nbreakable = " << (c.mesh.breakable == BreakableSet::All ? "all" : "notch-line")
    << "\nrefine = " << (c.mesh.refine ? "true" : "false") << "\n\n";
  o << "[load]\nprofile = " << triples(c.load.profile) << "\noffset = " << triples(c.load.offset) << "\nschedule = [";
  for (std::size_t i = 0; i < c.load.schedule.size(); ++i)
    o << (i ? ", " : "") << "[" << num(c.load.schedule[i].first) << ", " << num(c.load.schedule[i].second) << "]";
  o << "]\nhorizon = " << num(c.load.horizon) << "\n\n";
  o << "[solver]\nbackend = " << (c.solver.backend == Backend::Exact ? "exact" : "altmin")
    << "\ntolerance = " << num(c.solver.tolerance) << "\nlinear_tolerance = " << num(c.solver.linear_tolerance)
    << "\nbudget = " << c.solver.budget << "\nmax_iterations = " << c.solver.max_iterations
    << "\nat_epsilon_over_h = " << num(c.solver.at_epsilon_over_h) << "\nat_eta = " << num(c.solver.at_eta)
    << "\nthreshold = " << num(c.solver.threshold) << "\nseed_stride = " << c.solver.seed_stride
    << "\ntruncate = " << (c.solver.truncate ? "true" : "false") << "\n\n";
  o << "[time]\nT = " << num(c.time.T) << "\ndelta = " << num(c.time.delta) << "\nlevels = " << c.time.levels << "\n\n";
  o << "[output]\n";
  if (!c.output.directory.empty()) o << "directory = \"" << c.output.directory << "\"\n";
  o << "snapshot_every = " << c.output.snapshot_every << "\ncheckpoint_every = " << c.output.checkpoint_every << "\n";
  return o.str();
}

Problem build_problem(const RunConfig& c, int level) {
  if (level < 0) throw Error(ErrorKind::InvalidInput, "level must be nonnegative");
  const double h = c.mesh.refine ? std::ldexp(c.mesh.h, -level) : c.mesh.h;
  BoundarySpec bs{c.mesh.dirichlet};
  auto whole = [](double len, double step, const char* what) {
    const double n = len / step;
    if (std::abs(n - std::round(n)) > 1e-9 * n || std::round(n) < 1)
      throw Error(ErrorKind::InvalidMesh, std::string(what) + " is not a whole number of cells of size h");
    return static_cast<int>(std::round(n));
  };
  Mesh mesh = [&] {
    if (c.mesh.kind == "bar") {
      std::optional<double> notch;
      if (!c.mesh.notch.empty()) notch = c.mesh.notch[0];
      return Mesh::bar(c.mesh.length, whole(c.mesh.length, h, "mesh.length") + 1, c.mesh.kappa, bs, notch);
    }
    std::optional<NotchSpec> notch;
    if (!c.mesh.notch.empty()) notch = NotchSpec{c.mesh.notch[0], c.mesh.notch[1], c.mesh.notch[2], c.mesh.notch[3]};
    whole(c.mesh.width, h, "mesh.width");
    whole(c.mesh.height, h, "mesh.height");
    return Mesh::rect(c.mesh.width, c.mesh.height, h, c.mesh.kappa, bs, notch, c.mesh.breakable);
  }();
  EnergyDensity density = EnergyDensity::from_name(c.w.form, c.w.p, c.w.coefficient, c.w.growth_c);
  LoadProgram load(AffineField{c.load.profile}, AffineField{c.load.offset}, Schedule(c.load.schedule), c.load.horizon);
  validate_load(mesh, load);

  StepOptions step;
  step.backend = c.solver.backend;
  step.tolerance = c.solver.tolerance;
  step.linear_tolerance = c.solver.linear_tolerance;
  step.budget = c.solver.budget;
  step.max_iterations = c.solver.max_iterations;
  step.at_epsilon = c.solver.at_epsilon_over_h * h;
  step.at_eta = c.solver.at_eta;
  step.threshold = c.solver.threshold;
  step.seed_stride = c.solver.seed_stride;
  if (c.solver.truncate) step.truncation_bound = load.sup_boundary_norm(mesh);

  const int base = static_cast<int>(std::round(c.time.T / c.time.delta));
  return Problem{std::move(mesh), std::move(density), std::move(load), step, TimeGrid::dyadic(c.time.T, base, level)};
}

}  // namespace fqs
