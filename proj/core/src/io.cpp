#include "pertboot/io.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pertboot/errors.hpp"

namespace pertboot {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  std::ostringstream where;
  where << "row " << row << ", column " << col;
  if (cell.empty())
    throw parse_error("empty cell at " + where.str());
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw parse_error("non-numeric cell '" + cell + "' at " + where.str());
  }
  if (pos != cell.size())
    throw parse_error("non-numeric cell '" + cell + "' at " + where.str());
  if (!std::isfinite(v))
    throw parse_error("non-finite cell '" + cell + "' at " + where.str());
  return v;
}

}  // namespace

RegressionData load_csv(const std::string& path, const std::string& response,
                        bool with_intercept) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty file '" + path + "'");
  const std::vector<std::string> header = split_csv_line(line);

  std::size_t y_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == response) y_col = j;
  if (y_col == header.size())
    throw parse_error("response column '" + response + "' not found in '" +
                      path + "'");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << lineno << " has " << cells.size() << " cells, expected "
          << header.size();
      throw parse_error(msg.str());
    }
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      vals[j] = parse_cell(cells[j], lineno, j + 1);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw parse_error("no data rows in '" + path + "'");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index px = static_cast<Eigen::Index>(header.size()) - 1 +
                          (with_intercept ? 1 : 0);
  RegressionData data;
  data.X.resize(n, px);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    if (with_intercept) data.X(i, k++) = 1.0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == y_col)
        data.y(i) = rows[i][j];
      else
        data.X(i, k++) = rows[i][j];
    }
  }
  data.validate();
  return data;
}

void save_csv(const std::string& path, const RegressionData& data) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot write '" + path + "'");
  out << "y";
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
  out << "\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << data.y(i);
    for (Eigen::Index j = 0; j < data.p(); ++j) out << "," << data.X(i, j);
    out << "\n";
  }
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw parse_error("unterminated section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error("expected key = value at line " +
                        std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw parse_error("empty key at line " + std::to_string(lineno));
    if (!section.empty()) key = section + "." + key;
    cfg.kv_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

bool Config::has(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it != kv_.end()) used_[key] = true;
  return it != kv_.end();
}

std::string Config::get(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw parse_error("missing config key '" + key + "'");
  used_[key] = true;
  return it->second;
}

std::string Config::get_or(const std::string& key, std::string dflt) const {
  return has(key) ? get(key) : std::move(dflt);
}

double Config::get_real(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw parse_error("config key '" + key + "' is not a number: '" + v + "'");
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw parse_error("config key '" + key + "' is not an integer: '" + v + "'");
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const std::uint64_t x = std::stoull(v, &pos);
    if (pos == v.size() && v.find('-') == std::string::npos) return x;
  } catch (const std::exception&) {
  }
  throw parse_error("config key '" + key + "' is not an unsigned integer: '" +
                    v + "'");
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << h;
  return out.str();
}

std::string iso8601_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string RunManifest::to_json() const {
  std::ostringstream out;
  out << "{\n"
      << "  \"command\": \"" << command << "\",\n"
      << "  \"config_hash\": \"" << config_hash << "\",\n"
      << "  \"seed\": " << seed << ",\n"
      << "  \"version\": \"" << version << "\",\n"
      << "  \"timestamp\": \"" << timestamp << "\"\n"
      << "}\n";
  return out.str();
}

RunManifest make_manifest(const std::string& command,
                          const std::string& config_text, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config_hash = fnv1a_hex(config_text);
  m.seed = seed;
  m.version = "pertboot 0.1.0";
  m.timestamp = iso8601_utc_now();
  return m;
}

}  // namespace pertboot
