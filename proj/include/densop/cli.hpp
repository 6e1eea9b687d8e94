#ifndef DENSOP_CLI_HPP
#define DENSOP_CLI_HPP

#include <iosfwd>
#include <optional>
#include <string>

#include "densop/scenario.hpp"

namespace densop {
namespace cli {

// exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failure = 1;
inline constexpr int exit_validation_error = 2;
inline constexpr int exit_precondition_error = 3;

enum class Format { Plain, Latex, Report };

struct Options {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> grid;
  Format format = Format::Plain;
  std::optional<std::string> out_path;
};

Scenario load_with_overrides(const Options& opt);

int cmd_project(const Scenario& sc, const Options& opt, std::ostream& os);
int cmd_lift(const Scenario& sc, const Options& opt, std::ostream& os);
int cmd_extend(const Scenario& sc, const Options& opt, std::ostream& os);
int cmd_bracket(const Scenario& sc, const Options& opt, std::ostream& os);
int cmd_verify(const Scenario& sc, const Options& opt, std::ostream& os);
int cmd_emit(const Scenario& sc, const Options& opt, std::ostream& os);

// full argv dispatch; returns the process exit code
int run(int argc, char** argv);

} // namespace cli
} // namespace densop

#endif
