#include "fqs/io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fqs/error.hpp"
#include "fqs/text_format.hpp"

namespace fqs {

namespace fs = std::filesystem;

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  std::string require(const char* what) {
    std::string line;
    if (!next(line)) fail(std::string("unexpected end of file, expected ") + what);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, name_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  int line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::string name_;
  int line_no_ = 0;
};

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_double(const LineReader& r, const std::string& tok) {
  auto d = parse_double(tok);
  if (!d) r.fail("not a number: '" + tok + "'");
  return *d;
}

long long to_int(const LineReader& r, const std::string& tok) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) r.fail("not an integer: '" + tok + "'");
  return v;
}

// "<keyword> a b c ..." -> the tokens after the keyword.
std::vector<std::string> keyed(LineReader& r, const char* keyword) {
  auto toks = split_ws(r.require(keyword));
  if (toks.empty() || toks[0] != keyword) r.fail(std::string("expected '") + keyword + "'");
  toks.erase(toks.begin());
  return toks;
}

double keyed_double(LineReader& r, const char* keyword) {
  auto t = keyed(r, keyword);
  if (t.size() != 1) r.fail(std::string("expected one value after '") + keyword + "'");
  return to_double(r, t[0]);
}

std::vector<double> keyed_doubles(LineReader& r, const char* keyword) {
  std::vector<double> out;
  for (const auto& t : keyed(r, keyword)) out.push_back(to_double(r, t));
  return out;
}

std::vector<BondId> keyed_ids(LineReader& r, const char* keyword) {
  std::vector<BondId> out;
  for (const auto& t : keyed(r, keyword)) {
    const long long v = to_int(r, t);
    if (v < 0 || v > std::numeric_limits<BondId>::max()) r.fail("bond id out of range: " + t);
    out.push_back(static_cast<BondId>(v));
  }
  return out;
}

void check_magic(LineReader& r, const char* magic) {
  const auto toks = split_ws(r.require("a header"));
  if (toks.size() != 2 || toks[0] != magic) r.fail(std::string("not a ") + magic + " file");
  const long long v = to_int(r, toks[1]);
  if (v != kFormatVersion)
    throw Error(ErrorKind::Version, std::string(magic) + " format version " + toks[1] + " is not supported (expected " +
                                        std::to_string(kFormatVersion) + ")");
}

std::pair<int, int> read_shape(LineReader& r) {
  const auto t = split_ws(r.require("shape"));
  if (t.size() != 4 || t[0] != "components" || t[2] != "nodes") r.fail("expected 'components <m> nodes <n>'");
  const long long m = to_int(r, t[1]), n = to_int(r, t[3]);
  if (m < 1 || m > 8 || n < 1) r.fail("invalid shape");
  return {static_cast<int>(m), static_cast<int>(n)};
}

template <class T>
void put_list(std::ostream& out, const char* keyword, const std::vector<T>& v) {
  out << keyword;
  for (const T& x : v) {
    if constexpr (std::is_floating_point_v<T>) out << ' ' << format_double(x);
    else out << ' ' << x;
  }
  out << '\n';
}

LedgerRow parse_row(const LineReader& r, const std::string& line) {
  std::vector<double> f;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const std::string tok = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    f.push_back(to_double(r, tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (f.size() != 6) r.fail("expected 6 ledger columns, found " + std::to_string(f.size()));
  return LedgerRow{f[0], f[1], f[2], f[3], f[4], f[5]};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

}  // namespace

std::string ledger_csv_row(const LedgerRow& r) {
  return format_double(r.t) + ',' + format_double(r.bulk) + ',' + format_double(r.surface_c) + ',' +
         format_double(r.total) + ',' + format_double(r.theta) + ',' + format_double(r.work_cum);
}

void write_ledger(const fs::path& path, const EnergyLedger& ledger) {
  auto out = open_out(path);
  out << kLedgerHeader << '\n';
  for (const auto& r : ledger.rows) out << ledger_csv_row(r) << '\n';
  finish(out, path);
}

EnergyLedger parse_ledger(std::istream& in) {
  LineReader r(in, "ledger");
  if (r.require("the ledger header") != kLedgerHeader) r.fail(std::string("header must be '") + kLedgerHeader + "'");
  EnergyLedger l;
  std::string line;
  while (r.next(line)) l.rows.push_back(parse_row(r, line));
  return l;
}

EnergyLedger read_ledger(const fs::path& path) {
  auto in = open_in(path);
  return parse_ledger(in);
}

void write_trajectory_header(std::ostream& out, int components, int nodes) {
  out << "fracture-qs-trajectory " << kFormatVersion << "\ncomponents " << components << " nodes " << nodes << '\n';
}

void write_knot(std::ostream& out, int index, const Knot& knot) {
  out << "knot " << index << " t " << format_double(knot.t) << '\n';
  put_list(out, "broken", knot.broken);
  put_list(out, "values", knot.values);
}

void write_trajectory(const fs::path& path, const Trajectory& traj, int nodes) {
  auto out = open_out(path);
  write_trajectory_header(out, traj.components, nodes);
  for (std::size_t k = 0; k < traj.knots.size(); ++k) write_knot(out, static_cast<int>(k), traj.knots[k]);
  finish(out, path);
}

Trajectory parse_trajectory(std::istream& in) {
  LineReader r(in, "trajectory");
  check_magic(r, "fracture-qs-trajectory");
  const auto [m, n] = read_shape(r);
  Trajectory traj;
  traj.components = m;
  std::string line;
  while (r.next(line)) {
    const auto t = split_ws(line);
    if (t.size() != 4 || t[0] != "knot" || t[2] != "t") r.fail("expected 'knot <index> t <time>'");
    if (to_int(r, t[1]) != static_cast<long long>(traj.knots.size()))
      r.fail("knot index " + t[1] + " out of sequence");
    Knot k;
    k.t = to_double(r, t[3]);
    k.broken = keyed_ids(r, "broken");
    for (std::size_t i = 1; i < k.broken.size(); ++i)
      if (!(k.broken[i - 1] < k.broken[i])) r.fail("broken-bond list must be sorted and duplicate-free");
    k.values = keyed_doubles(r, "values");
    if (k.values.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(n))
      r.fail("expected " + std::to_string(m * n) + " nodal values, found " + std::to_string(k.values.size()));
    traj.knots.push_back(std::move(k));
  }
  return traj;
}

Trajectory read_trajectory(const fs::path& path) {
  auto in = open_in(path);
  return parse_trajectory(in);
}

namespace {

void put_state(std::ostream& out, const DisplacementState& s) {
  out << "components " << s.components << " nodes " << s.values.size() / static_cast<std::size_t>(s.components) << '\n';
  out << "bulk " << format_double(s.bulk) << "\nnew_surface " << format_double(s.new_surface) << '\n';
  put_list(out, "jump", s.jump);
  put_list(out, "values", s.values);
}

DisplacementState get_state(LineReader& r) {
  DisplacementState s;
  const auto [m, n] = read_shape(r);
  s.components = m;
  s.bulk = keyed_double(r, "bulk");
  s.new_surface = keyed_double(r, "new_surface");
  s.jump = keyed_ids(r, "jump");
  s.values = keyed_doubles(r, "values");
  if (s.values.size() != static_cast<std::size_t>(m) * static_cast<std::size_t>(n))
    r.fail("expected " + std::to_string(m * n) + " nodal values");
  return s;
}

}  // namespace

void write_snapshot(const fs::path& path, const DisplacementState& state) {
  auto out = open_out(path);
  out << "fracture-qs-snapshot " << kFormatVersion << '\n';
  put_state(out, state);
  finish(out, path);
}

DisplacementState read_snapshot(const fs::path& path) {
  auto in = open_in(path);
  LineReader r(in, path.filename().string());
  check_magic(r, "fracture-qs-snapshot");
  return get_state(r);
}

void write_checkpoint(const fs::path& path, const Checkpoint& cp) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    auto out = open_out(tmp);
    out << "fracture-qs-checkpoint " << kFormatVersion << '\n';
    out << "index " << cp.index << "\nt " << format_double(cp.t) << '\n';
    put_list(out, "gamma", cp.gamma.broken());
    put_state(out, cp.state);
    put_list(out, "phase", cp.phase.v);
    out << "ledger " << cp.ledger.rows.size() << '\n';
    for (const auto& row : cp.ledger.rows) out << ledger_csv_row(row) << '\n';
    finish(out, tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint read_checkpoint(const fs::path& path, const Mesh& mesh) {
  auto in = open_in(path);
  LineReader r(in, path.filename().string());
  check_magic(r, "fracture-qs-checkpoint");
  Checkpoint cp;
  {
    auto t = keyed(r, "index");
    if (t.size() != 1) r.fail("expected 'index <k>'");
    cp.index = static_cast<int>(to_int(r, t[0]));
  }
  cp.t = keyed_double(r, "t");
  try {
    cp.gamma = CrackSet(mesh, keyed_ids(r, "gamma"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    r.fail(e.what());
  }
  cp.state = get_state(r);
  if (cp.state.values.size() != static_cast<std::size_t>(mesh.node_count() * cp.state.components))
    r.fail("checkpoint was written for a different mesh");
  cp.phase.v = keyed_doubles(r, "phase");
  auto t = keyed(r, "ledger");
  if (t.size() != 1) r.fail("expected 'ledger <rows>'");
  const long long rows = to_int(r, t[0]);
  for (long long i = 0; i < rows; ++i) cp.ledger.rows.push_back(parse_row(r, r.require("a ledger row")));
  return cp;
}

void write_vtk(const fs::path& path, const Mesh& mesh, const Knot& knot, int m) {
  auto out = open_out(path);
  const int nx = mesh.dimension() == 1 ? mesh.node_count() : mesh.nx();
  const int ny = mesh.dimension() == 1 ? 1 : mesh.ny();
  out << "# vtk DataFile Version 3.0\nfracture-qs t=" << format_double(knot.t) << "\nASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << nx << ' ' << ny << " 1\nPOINTS " << mesh.node_count() << " double\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    const auto p = mesh.node_pos(i);
    out << format_double(p[0]) << ' ' << format_double(p[1]) << " 0\n";
  }
  out << "POINT_DATA " << mesh.node_count() << '\n';
  for (int c = 0; c < m; ++c) {
    out << "SCALARS u" << c << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < mesh.node_count(); ++i) out << format_double(knot.values[static_cast<std::size_t>(i * m + c)]) << '\n';
  }
  std::vector<int> broken(static_cast<std::size_t>(mesh.node_count()), 0);
  for (BondId id : knot.broken) {
    const Bond& b = mesh.bond(id);
    ++broken[static_cast<std::size_t>(b.a)];
    if (!b.is_ghost()) ++broken[static_cast<std::size_t>(b.b)];
  }
  out << "SCALARS broken_bonds int 1\nLOOKUP_TABLE default\n";
  for (int v : broken) out << v << '\n';
  finish(out, path);
}

OutputLock::OutputLock(const fs::path& dir) : file_(dir / ".fracture-qs.lock") {
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw Error(ErrorKind::Io, "output directory '" + dir.string() + "' is locked by another run (" + file_.string() + ")");
    throw Error(ErrorKind::Io, "cannot create lock '" + file_.string() + "': " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  (void)!::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

}  // namespace fqs
