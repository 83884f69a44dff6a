#ifndef NSKRIG_RUNNER_HPP
#define NSKRIG_RUNNER_HPP

#include <map>
#include <string>
#include <vector>

#include "nskrig/engine.hpp"

namespace nskrig {

// One batch run: a mode plus flat key=value settings. Settings come from the
// config file first, then command-line flags override individual keys.
struct RunConfig {
  std::string mode; // simulate | fit | predict | ellipses
  std::map<std::string, std::string> keys;

  bool has(const std::string& key) const { return keys.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
};

// key = value lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// "xmin,xmax,ymin,ymax,nx,ny" -> row-major grid, x fastest.
std::vector<Location> parse_grid(const std::string& text);

// Comment block echoing mode, sorted settings, and the effective thread cap;
// prepended to every output file.
std::string config_echo(const RunConfig& config);

// Applies NSKRIG_THREADS if set. Returns the cap (0 = unlimited).
int apply_thread_cap();

// Executes the run, writing artifacts into keys["out"] (default "."). Throws
// nskrig::error subclasses; the CLI maps their codes to exit status.
void run(const RunConfig& config);

} // namespace nskrig

#endif
