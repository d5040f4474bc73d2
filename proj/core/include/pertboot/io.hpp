#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pertboot/mest.hpp"

namespace pertboot {

/// Reads a numeric CSV with a header row. The named response column becomes
/// y; every other column, in file order, becomes a design column. With
/// with_intercept a ones column is prepended. Parse failures cite the
/// 1-based row and column. The returned data is validated.
RegressionData load_csv(const std::string& path, const std::string& response,
                        bool with_intercept);

/// Writes data as CSV (header "y,x1,x2,..."; no intercept column stripping,
/// the matrix is emitted as-is). Round-trips through load_csv with
/// with_intercept=false when the response is named "y".
void save_csv(const std::string& path, const RegressionData& data);

/// Flat key-value config with [section] headers. Keys are stored as
/// "section.key" ("key" alone before any header). '#' starts a comment.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;                  // throws if absent
  std::string get_or(const std::string& key, std::string dflt) const;
  double get_real(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

  /// Keys present in the file but never read through the getters; the CLI
  /// treats any leftover as a usage error naming the key.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, bool> used_;
};

struct RunManifest {
  std::string command;      // the invoking command line
  std::string config_hash;  // FNV-1a 64-bit hex digest of the config text
  std::uint64_t seed = 0;
  std::string version;
  std::string timestamp;  // ISO-8601 UTC

  std::string to_json() const;
};

/// FNV-1a 64-bit digest as 16 hex characters.
std::string fnv1a_hex(const std::string& text);

/// Current UTC time formatted as e.g. 2026-01-02T03:04:05Z.
std::string iso8601_utc_now();

RunManifest make_manifest(const std::string& command,
                          const std::string& config_text, std::uint64_t seed);

}  // namespace pertboot
