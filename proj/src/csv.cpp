#include "ivimpute/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ivimpute/errors.hpp"

namespace ivimpute {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw ValidationError("column '" + name + "' not found in CSV header");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("'" + path + "': empty file, header row required");
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw ValidationError("'" + path + "' line " + std::to_string(lineno) +
                            ": expected " + std::to_string(t.header.size()) +
                            " cells, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double parse_double(const std::string& cell, const std::string& context) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ValidationError("cannot parse '" + cell + "' as a number (" +
                          context + ")");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

void write_experiment_csv(const std::string& path,
                          const std::vector<ExperimentRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "p,rmse,mean_se_robust,mean_se_conventional,rejection_robust,"
         "rejection_conventional,mean_cc_f,replications_used\n";
  for (const auto& r : rows) {
    out << format_double(r.p) << ',' << format_double(r.rmse) << ','
        << format_double(r.mean_se_robust) << ','
        << format_double(r.mean_se_conventional) << ','
        << format_double(r.rejection_robust) << ','
        << format_double(r.rejection_conventional) << ','
        << format_double(r.mean_cc_f) << ',' << r.replications_used << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<ExperimentRow> read_experiment_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t jp = t.column("p");
  const std::size_t jr = t.column("rmse");
  const std::size_t jsr = t.column("mean_se_robust");
  const std::size_t jsc = t.column("mean_se_conventional");
  const std::size_t jrr = t.column("rejection_robust");
  const std::size_t jrc = t.column("rejection_conventional");
  const std::size_t jf = t.column("mean_cc_f");
  const std::size_t ju = t.column("replications_used");
  std::vector<ExperimentRow> rows;
  rows.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& cells = t.rows[i];
    const std::string ctx = "experiment row " + std::to_string(i + 1);
    ExperimentRow r;
    r.p = parse_double(cells[jp], ctx);
    r.rmse = parse_double(cells[jr], ctx);
    r.mean_se_robust = parse_double(cells[jsr], ctx);
    r.mean_se_conventional = parse_double(cells[jsc], ctx);
    r.rejection_robust = parse_double(cells[jrr], ctx);
    r.rejection_conventional = parse_double(cells[jrc], ctx);
    r.mean_cc_f = parse_double(cells[jf], ctx);
    r.replications_used = static_cast<int>(parse_double(cells[ju], ctx));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ivimpute
