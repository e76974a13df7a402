#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pargrid/bench.hpp"

namespace pargrid::cli {

/// Bad command line or config file; the driver prints help and exits 2.
class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Subcommand { bench, verify, amdahl };

struct RunSpec {
    Subcommand subcommand = Subcommand::bench;
    bench::KernelId kernel = bench::KernelId::batch;
    bool kernel_set = false;
    std::vector<int> workers = {1};
    Backend backend = Backend::inproc;
    int trials = 3;
    std::optional<std::string> config_path;
    std::optional<std::string> output_path;
    std::optional<std::string> plot_path;
    std::uint64_t seed = 42;
    bool seed_set = false; ///< --seed beats a config-file seed only when given
    std::optional<std::string> fraction; ///< decimal text, kept exact
    std::optional<double> timeout_s;
    bool inject_fault = false; ///< testing only: corrupts one verify result
    bool help = false;
};

/// Maps argv (without the program name) to a RunSpec; throws UsageError on
/// anything unrecognized. Total: every argv either parses or errors.
RunSpec parse_args(const std::vector<std::string>& args);

/// Executes the spec. Exit codes: 0 success, 1 verification failure,
/// 2 usage error, 3 runtime error.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

std::string usage_text();

} // namespace pargrid::cli
