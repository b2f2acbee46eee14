#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ptycho/io.hpp"

namespace ptycho {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(where + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_log_csv(const fs::path& path, const ConvergenceLog& log, const Provenance& identity) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : identity) f << "# " << k << "=" << v << "\n";
  bool certified = false;
  for (const auto& s : log.samples) certified = certified || s.certification.has_value();
  f << "iter,residual,mag_error,elapsed_s,stop_flag" << (certified ? ",certification" : "") << "\n";
  for (const auto& s : log.samples) {
    f << s.iter << "," << format_double(s.residual) << ","
      << (s.mag_error ? format_double(*s.mag_error) : "") << "," << format_double(s.elapsed) << ","
      << to_string(s.stop_flag);
    if (certified) f << "," << s.certification.value_or("");
    f << "\n";
  }
  if (!f) throw DataError("write failed for " + path.string());
}

LoadedLog read_log_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open log " + path.string());
  LoadedLog out;
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#", 0) == 0) {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) out.identity[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (header.empty()) {
      header = split(line);
      for (const char* need : {"iter", "residual", "mag_error", "elapsed_s", "stop_flag"}) {
        if (std::find(header.begin(), header.end(), need) == header.end()) {
          throw DataError(path.string() + ": missing column '" + need + "'");
        }
      }
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    MetricSample s;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& h = header[i];
      const auto& c = cells[i];
      if (h == "iter") {
        s.iter = static_cast<long>(parse_double(c, where));
      } else if (h == "residual") {
        s.residual = parse_double(c, where);
      } else if (h == "mag_error") {
        if (!c.empty()) s.mag_error = parse_double(c, where);
      } else if (h == "elapsed_s") {
        s.elapsed = parse_double(c, where);
      } else if (h == "stop_flag") {
        s.stop_flag = parse_stop_reason(c);
      } else if (h == "certification") {
        if (!c.empty()) s.certification = c;
      }
    }
    if (s.stop_flag != StopReason::none) out.log.stop_reason = s.stop_flag;
    out.log.samples.push_back(std::move(s));
  }
  if (header.empty()) throw DataError(path.string() + ": no header row");
  return out;
}

}  // namespace ptycho
