#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pargrid/kernels/batch.hpp"
#include "pargrid/kernels/sar.hpp"
#include "pargrid/kernels/sqif.hpp"
#include "pargrid/transport.hpp"

namespace pargrid::bench {

enum class KernelId { batch, sar, sqif_tp, sqif_dp };

std::string to_string(KernelId id);
KernelId kernel_from_string(const std::string& name);

/// Union of the kernel configurations; only the member matching the kernel
/// id in play is read.
struct BenchConfig {
    kernels::BatchJob batch;
    kernels::SarConfig sar;
    kernels::SqifParams sqif;
};

/// Hex digest of the configuration relevant to `id`; records sharing a
/// digest are comparable in one speedup analysis.
std::string config_digest(KernelId id, const BenchConfig& cfg);

struct TimingRecord {
    KernelId kernel = KernelId::batch;
    int workers = 1;
    int trial = 0;
    double wall_time_s = 0.0;
    std::string config_digest;
};

struct SpeedupRow {
    KernelId kernel = KernelId::batch;
    int workers = 1;
    double mean_time_s = 0.0;
    double speedup = 0.0;
    double efficiency = 0.0;
    double amdahl_bound = 0.0; ///< NaN when no parallel fraction was declared
};

/// Launches the kernel `trials` times at `workers` ranks, timing the kernel
/// body only (between an entry barrier and the kernel's return on rank 0).
std::vector<TimingRecord> time_kernel(KernelId id, const BenchConfig& cfg, int workers,
                                      int trials, const LaunchOptions& options = {});

/// Per-worker-count means, speedup T(1)/T(P), and efficiency. Requires a
/// P=1 baseline and a single config digest across all records.
std::vector<SpeedupRow> speedup_table(const std::vector<TimingRecord>& records,
                                      std::optional<double> declared_fraction = std::nullopt);

/// A parallel fraction carried as the exact decimal the user declared
/// (e.g. "0.99" -> 99/100), so the textbook bound values come out exact
/// instead of inheriting binary round-off from the decimal literal.
struct ParallelFraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static ParallelFraction parse(const std::string& text);
    static ParallelFraction from_double(double f);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Maximum achievable speedup 1/(1-f) for parallel fraction f in [0, 1).
double amdahl_limit(const ParallelFraction& f);
double amdahl_limit(double f);

/// Bounded speedup 1/((1-f) + f/P) at P workers, f in [0, 1].
double amdahl_speedup(const ParallelFraction& f, std::int64_t workers);
double amdahl_speedup(double f, std::int64_t workers);

/// CSV report, one row per worker count:
/// kernel,workers,mean_time_s,speedup,efficiency,amdahl_bound
/// with numeric fields at 9 significant digits.
std::string report_csv(const std::vector<SpeedupRow>& rows);
void write_report(const std::vector<SpeedupRow>& rows, const std::string& path);
std::vector<SpeedupRow> read_report(const std::string& path);

/// Standalone SVG plotting mean time (left axis) and speedup (right axis)
/// against worker count, with the Amdahl bound overlaid when a fraction is
/// declared. Byte-identical output for identical input.
void emit_plot(const std::vector<SpeedupRow>& rows, std::optional<double> declared_fraction,
               const std::string& path);

// Kernel-result CSV writers, deterministic and lossless (17 significant
// digits). A matrix becomes one comma-separated line per row; a transfer
// curve becomes flux,voltage rows; a value series becomes index,value rows.
void write_matrix_csv(const RealMatrix& m, const std::string& path);
void write_curve_csv(const kernels::TransferCurve& curve, const std::string& path);
void write_series_csv(const std::vector<double>& values, const std::string& path);

} // namespace pargrid::bench
