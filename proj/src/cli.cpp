#include "pargrid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

namespace pargrid::cli {

namespace {

std::uint64_t parse_u64(const std::string& s, const std::string& flag)
{
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || s.front() == '-') {
        throw UsageError(flag + ": '" + s + "' is not a non-negative integer");
    }
    return v;
}

int parse_int(const std::string& s, const std::string& flag, int min_value)
{
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE || v < min_value
        || v > 1000000000L) {
        throw UsageError(flag + ": '" + s + "' is not an integer >= "
                         + std::to_string(min_value));
    }
    return static_cast<int>(v);
}

double parse_f64(const std::string& s, const std::string& flag)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw UsageError(flag + ": '" + s + "' is not a number");
    }
    return v;
}

std::vector<int> parse_worker_list(const std::string& s)
{
    std::vector<int> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = s.find(',', start);
        const std::string token =
            comma == std::string::npos ? s.substr(start) : s.substr(start, comma - start);
        out.push_back(parse_int(token, "--workers", 1)); // empty tokens fail here
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string g9(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

std::string usage_text()
{
    return
        "usage: pargrid <subcommand> [flags]\n"
        "\n"
        "subcommands:\n"
        "  bench    time a kernel across worker counts and write a speedup report\n"
        "  verify   check parallel kernels against their serial references\n"
        "  amdahl   print the Amdahl speedup bound for a parallel fraction\n"
        "\n"
        "flags:\n"
        "  --kernel {batch|sar|sqif-tp|sqif-dp}   kernel to run (bench, verify)\n"
        "  --workers <list>     comma-separated worker counts, e.g. 1,2,4 (default 1)\n"
        "  --backend {inproc|socket}              transport backend (default inproc)\n"
        "  --trials <n>         timing trials per worker count (default 3)\n"
        "  --config <path>      key=value config file; flags win on conflict\n"
        "  --out <path>         bench: CSV report destination (default: stdout);\n"
        "                       verify: dump the serial reference result as CSV\n"
        "  --plot <path>        also write an SVG time/speedup plot\n"
        "  --seed <n>           kernel seed (default 42)\n"
        "  --fraction <f>       parallel fraction as a decimal, e.g. 0.9 (amdahl)\n"
        "  --timeout-s <n>      transport timeout in seconds (default 60;\n"
        "                       PARGRID_TIMEOUT_S is used when the flag is absent)\n"
        "  --inject-fault       testing only: corrupt one verify result\n"
        "  --help               show this text\n"
        "\n"
        "config file keys:\n"
        "  batch: items, work_cost, seed\n"
        "  sar:   rows, cols, seed\n"
        "  sqif:  units, flux_count, flux_min, flux_max, bias, coupling, damping,\n"
        "         spread, dt, t_max, seed\n"
        "\n"
        "exit codes: 0 ok, 1 verification failure, 2 usage error, 3 runtime error\n";
}

RunSpec parse_args(const std::vector<std::string>& args)
{
    RunSpec spec;
    if (args.empty()) {
        throw UsageError("missing subcommand (bench, verify or amdahl)");
    }
    if (args[0] == "--help" || args[0] == "-h") {
        spec.help = true;
        return spec;
    }
    if (args[0] == "bench") {
        spec.subcommand = Subcommand::bench;
    } else if (args[0] == "verify") {
        spec.subcommand = Subcommand::verify;
    } else if (args[0] == "amdahl") {
        spec.subcommand = Subcommand::amdahl;
    } else {
        throw UsageError("unknown subcommand '" + args[0] + "'");
    }

    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& flag = args[i];
        const auto value = [&]() -> const std::string& {
            if (i + 1 >= args.size()) {
                throw UsageError(flag + " requires a value");
            }
            return args[++i];
        };
        if (flag == "--kernel") {
            try {
                spec.kernel = bench::kernel_from_string(value());
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            spec.kernel_set = true;
        } else if (flag == "--workers") {
            spec.workers = parse_worker_list(value());
        } else if (flag == "--backend") {
            const std::string& b = value();
            if (b == "inproc") {
                spec.backend = Backend::inproc;
            } else if (b == "socket") {
                spec.backend = Backend::socket;
            } else {
                throw UsageError("--backend: expected inproc or socket, got '" + b + "'");
            }
        } else if (flag == "--trials") {
            spec.trials = parse_int(value(), "--trials", 1);
        } else if (flag == "--config") {
            spec.config_path = value();
        } else if (flag == "--out") {
            spec.output_path = value();
        } else if (flag == "--plot") {
            spec.plot_path = value();
        } else if (flag == "--seed") {
            spec.seed = parse_u64(value(), "--seed");
            spec.seed_set = true;
        } else if (flag == "--fraction") {
            spec.fraction = value();
        } else if (flag == "--timeout-s") {
            const double t = parse_f64(value(), "--timeout-s");
            if (t <= 0.0) {
                throw UsageError("--timeout-s must be > 0");
            }
            spec.timeout_s = t;
        } else if (flag == "--inject-fault") {
            spec.inject_fault = true;
        } else if (flag == "--help" || flag == "-h") {
            spec.help = true;
        } else {
            throw UsageError("unknown flag '" + flag + "'");
        }
    }

    if (spec.help) {
        return spec;
    }
    if (spec.subcommand == Subcommand::bench || spec.subcommand == Subcommand::verify) {
        if (!spec.kernel_set) {
            throw UsageError("--kernel is required for bench and verify");
        }
    }
    if (spec.subcommand == Subcommand::amdahl) {
        if (!spec.fraction) {
            throw UsageError("amdahl: --fraction is required");
        }
        try {
            const auto f = bench::ParallelFraction::parse(*spec.fraction);
            if (f.num >= f.den) {
                throw std::invalid_argument("the bound is unbounded at fraction 1");
            }
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("--fraction: ") + e.what());
        }
    }
    return spec;
}

namespace {

bench::BenchConfig default_config(bench::KernelId id, std::uint64_t seed)
{
    bench::BenchConfig cfg;
    cfg.batch = kernels::BatchJob{64, 200000, seed};
    cfg.sar = kernels::SarConfig{128, 192, seed};
    cfg.sqif.bias = 0.9;
    cfg.sqif.coupling = 0.5;
    cfg.sqif.damping = 1.0;
    cfg.sqif.spread = 0.05;
    cfg.sqif.dt = 0.01;
    cfg.sqif.t_max = 20.0;
    cfg.sqif.n_units = 64;
    cfg.sqif.seed = seed;
    cfg.sqif.flux_points.clear();
    const int count = 32;
    for (int k = 0; k < count; ++k) {
        cfg.sqif.flux_points.push_back(-1.0 + 2.0 * k / (count - 1));
    }
    (void)id;
    return cfg;
}

struct SqifFluxSpec {
    int count = 32;
    double lo = -1.0;
    double hi = 1.0;
    bool touched = false;
};

void apply_config_file(const std::string& path, bench::KernelId id, bench::BenchConfig& cfg,
                       SqifFluxSpec& flux)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("--config: cannot open " + path);
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--config: line " + std::to_string(lineno)
                             + " is not key=value");
        }
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        const auto where = "config key '" + key + "'";

        const bool is_sqif =
            id == bench::KernelId::sqif_tp || id == bench::KernelId::sqif_dp;
        if (key == "seed") {
            const std::uint64_t s = parse_u64(val, where);
            cfg.batch.seed = cfg.sar.seed = cfg.sqif.seed = s;
        } else if (id == bench::KernelId::batch && key == "items") {
            cfg.batch.n_items = parse_u64(val, where);
        } else if (id == bench::KernelId::batch && key == "work_cost") {
            cfg.batch.work_cost = parse_u64(val, where);
            if (cfg.batch.work_cost < 1) {
                throw UsageError("config: work_cost must be >= 1");
            }
        } else if (id == bench::KernelId::sar && key == "rows") {
            cfg.sar.n_rows = parse_u64(val, where);
        } else if (id == bench::KernelId::sar && key == "cols") {
            cfg.sar.n_cols = parse_u64(val, where);
        } else if (is_sqif && key == "units") {
            cfg.sqif.n_units = parse_u64(val, where);
        } else if (is_sqif && key == "flux_count") {
            flux.count = parse_int(val, where, 1);
            flux.touched = true;
        } else if (is_sqif && key == "flux_min") {
            flux.lo = parse_f64(val, where);
            flux.touched = true;
        } else if (is_sqif && key == "flux_max") {
            flux.hi = parse_f64(val, where);
            flux.touched = true;
        } else if (is_sqif && key == "bias") {
            cfg.sqif.bias = parse_f64(val, where);
        } else if (is_sqif && key == "coupling") {
            cfg.sqif.coupling = parse_f64(val, where);
        } else if (is_sqif && key == "damping") {
            cfg.sqif.damping = parse_f64(val, where);
        } else if (is_sqif && key == "spread") {
            cfg.sqif.spread = parse_f64(val, where);
        } else if (is_sqif && key == "dt") {
            cfg.sqif.dt = parse_f64(val, where);
        } else if (is_sqif && key == "t_max") {
            cfg.sqif.t_max = parse_f64(val, where);
        } else {
            throw UsageError("--config: unknown key '" + key + "' for kernel "
                             + bench::to_string(id));
        }
    }
}

LaunchOptions resolve_launch_options(const RunSpec& spec)
{
    LaunchOptions opts;
    opts.backend = spec.backend;
    double seconds = 60.0;
    if (spec.timeout_s) {
        seconds = *spec.timeout_s;
    } else if (const char* env = std::getenv("PARGRID_TIMEOUT_S")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0' || !(v > 0.0)) {
            throw UsageError("PARGRID_TIMEOUT_S: '" + std::string(env)
                             + "' is not a positive number");
        }
        seconds = v;
    }
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
    return opts;
}

bench::BenchConfig resolve_config(const RunSpec& spec)
{
    bench::BenchConfig cfg = default_config(spec.kernel, spec.seed);
    SqifFluxSpec flux;
    if (spec.config_path) {
        apply_config_file(*spec.config_path, spec.kernel, cfg, flux);
        if (flux.touched) {
            cfg.sqif.flux_points.clear();
            for (int k = 0; k < flux.count; ++k) {
                cfg.sqif.flux_points.push_back(
                    flux.count == 1
                        ? flux.lo
                        : flux.lo + (flux.hi - flux.lo) * k / (flux.count - 1));
            }
        }
    }
    if (spec.seed_set) {
        cfg.batch.seed = cfg.sar.seed = cfg.sqif.seed = spec.seed;
    }
    return cfg;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

int run_verify(const RunSpec& spec, const bench::BenchConfig& cfg, const LaunchOptions& opts,
               std::ostream& out)
{
    // One serial reference per kernel; every worker count is checked
    // against it.
    std::vector<double> expect_batch;
    RealMatrix expect_image;
    kernels::TransferCurve expect_curve;
    double tolerance = 0.0;
    switch (spec.kernel) {
    case bench::KernelId::batch:
        expect_batch = kernels::run_batch_serial(cfg.batch);
        tolerance = 0.0;
        break;
    case bench::KernelId::sar:
        expect_image = kernels::form_image_serial(kernels::generate_field(cfg.sar), cfg.sar);
        tolerance = 1e-10;
        break;
    case bench::KernelId::sqif_tp:
    case bench::KernelId::sqif_dp:
        expect_curve = kernels::sqif_sweep_serial(cfg.sqif);
        tolerance = 1e-12;
        break;
    }

    bool all_pass = true;
    for (int p : spec.workers) {
        double diff = 0.0;
        switch (spec.kernel) {
        case bench::KernelId::batch: {
            auto results = launch(
                p, [&](WorkerCtx& ctx) { return kernels::run_batch_parallel(ctx, cfg.batch); },
                opts);
            auto got = results[0].value();
            if (spec.inject_fault && !got.empty()) {
                got[0] += 1e-3;
            }
            diff = max_abs_diff(expect_batch, got);
            break;
        }
        case bench::KernelId::sar: {
            auto results = launch(
                p, [&](WorkerCtx& ctx) { return kernels::form_image_parallel(ctx, cfg.sar); },
                opts);
            auto got = results[0].value();
            if (spec.inject_fault && !got.empty()) {
                got(0, 0) += 1e-3;
            }
            diff = got.same_shape(expect_image)
                ? max_abs_diff(expect_image.storage(), got.storage())
                : std::numeric_limits<double>::infinity();
            break;
        }
        case bench::KernelId::sqif_tp:
        case bench::KernelId::sqif_dp: {
            const bool tp = spec.kernel == bench::KernelId::sqif_tp;
            auto results = launch(
                p,
                [&](WorkerCtx& ctx) {
                    return tp ? kernels::sqif_sweep_tp(ctx, cfg.sqif)
                              : kernels::sqif_sweep_dp(ctx, cfg.sqif);
                },
                opts);
            auto got = results[0].value();
            if (spec.inject_fault && !got.voltage.empty()) {
                got.voltage[0] += 1e-3;
            }
            diff = max_abs_diff(expect_curve.voltage, got.voltage);
            break;
        }
        }

        const bool pass = diff <= tolerance;
        all_pass = all_pass && pass;
        out << (pass ? "PASS" : "FAIL") << " " << bench::to_string(spec.kernel) << " P=" << p
            << " max_abs_diff=" << g9(diff) << " tolerance=" << g9(tolerance) << "\n";
    }

    if (spec.output_path) {
        switch (spec.kernel) {
        case bench::KernelId::batch:
            bench::write_series_csv(expect_batch, *spec.output_path);
            break;
        case bench::KernelId::sar:
            bench::write_matrix_csv(expect_image, *spec.output_path);
            break;
        case bench::KernelId::sqif_tp:
        case bench::KernelId::sqif_dp:
            bench::write_curve_csv(expect_curve, *spec.output_path);
            break;
        }
        out << "wrote " << *spec.output_path << "\n";
    }
    return all_pass ? 0 : 1;
}

int run_bench(const RunSpec& spec, const bench::BenchConfig& cfg, const LaunchOptions& opts,
              std::ostream& out)
{
    if (std::find(spec.workers.begin(), spec.workers.end(), 1) == spec.workers.end()) {
        throw UsageError("bench: --workers must include 1 for the speedup baseline");
    }
    std::vector<bench::TimingRecord> records;
    for (int p : spec.workers) {
        const auto batch = bench::time_kernel(spec.kernel, cfg, p, spec.trials, opts);
        records.insert(records.end(), batch.begin(), batch.end());
    }
    std::optional<double> fraction;
    if (spec.fraction) {
        fraction = bench::ParallelFraction::parse(*spec.fraction).value();
    }
    const auto rows = bench::speedup_table(records, fraction);
    if (spec.output_path) {
        bench::write_report(rows, *spec.output_path);
        out << "wrote " << *spec.output_path << "\n";
    } else {
        out << bench::report_csv(rows);
    }
    if (spec.plot_path) {
        bench::emit_plot(rows, fraction, *spec.plot_path);
        out << "wrote " << *spec.plot_path << "\n";
    }
    return 0;
}

int run_amdahl(const RunSpec& spec, std::ostream& out)
{
    const auto f = bench::ParallelFraction::parse(*spec.fraction);
    out << g9(bench::amdahl_limit(f)) << "\n";
    for (int p : spec.workers) {
        out << "P=" << p << " " << g9(bench::amdahl_speedup(f, p)) << "\n";
    }
    return 0;
}

} // namespace

int run(const RunSpec& spec, std::ostream& out, std::ostream& err)
{
    try {
        if (spec.help) {
            out << usage_text();
            return 0;
        }
        switch (spec.subcommand) {
        case Subcommand::amdahl:
            return run_amdahl(spec, out);
        case Subcommand::verify:
            return run_verify(spec, resolve_config(spec), resolve_launch_options(spec), out);
        case Subcommand::bench:
            return run_bench(spec, resolve_config(spec), resolve_launch_options(spec), out);
        }
        return 3;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace pargrid::cli
