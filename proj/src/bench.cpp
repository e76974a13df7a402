#include "pargrid/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pargrid::bench {

std::string to_string(KernelId id)
{
    switch (id) {
    case KernelId::batch:
        return "batch";
    case KernelId::sar:
        return "sar";
    case KernelId::sqif_tp:
        return "sqif-tp";
    case KernelId::sqif_dp:
        return "sqif-dp";
    }
    throw std::invalid_argument("unknown kernel id");
}

KernelId kernel_from_string(const std::string& name)
{
    if (name == "batch") {
        return KernelId::batch;
    }
    if (name == "sar") {
        return KernelId::sar;
    }
    if (name == "sqif-tp") {
        return KernelId::sqif_tp;
    }
    if (name == "sqif-dp") {
        return KernelId::sqif_dp;
    }
    throw std::invalid_argument("unknown kernel '" + name
                                + "' (expected batch, sar, sqif-tp or sqif-dp)");
}

namespace {

std::string format_g(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

std::string config_digest(KernelId id, const BenchConfig& cfg)
{
    std::ostringstream canon;
    canon << to_string(id) << '|';
    switch (id) {
    case KernelId::batch:
        canon << "items=" << cfg.batch.n_items << "|cost=" << cfg.batch.work_cost
              << "|seed=" << cfg.batch.seed;
        break;
    case KernelId::sar:
        canon << "rows=" << cfg.sar.n_rows << "|cols=" << cfg.sar.n_cols
              << "|seed=" << cfg.sar.seed;
        break;
    case KernelId::sqif_tp:
    case KernelId::sqif_dp:
        canon << "units=" << cfg.sqif.n_units << "|bias=" << format_g(cfg.sqif.bias, 17)
              << "|coupling=" << format_g(cfg.sqif.coupling, 17)
              << "|damping=" << format_g(cfg.sqif.damping, 17)
              << "|spread=" << format_g(cfg.sqif.spread, 17)
              << "|dt=" << format_g(cfg.sqif.dt, 17)
              << "|tmax=" << format_g(cfg.sqif.t_max, 17) << "|seed=" << cfg.sqif.seed
              << "|flux=";
        for (double x : cfg.sqif.flux_points) {
            canon << format_g(x, 17) << ',';
        }
        break;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.str())));
    return buf;
}

namespace {

void run_kernel_once(WorkerCtx& ctx, KernelId id, const BenchConfig& cfg)
{
    switch (id) {
    case KernelId::batch:
        kernels::run_batch_parallel(ctx, cfg.batch);
        break;
    case KernelId::sar:
        kernels::form_image_parallel(ctx, cfg.sar);
        break;
    case KernelId::sqif_tp:
        kernels::sqif_sweep_tp(ctx, cfg.sqif);
        break;
    case KernelId::sqif_dp:
        kernels::sqif_sweep_dp(ctx, cfg.sqif);
        break;
    }
}

} // namespace

std::vector<TimingRecord> time_kernel(KernelId id, const BenchConfig& cfg, int workers,
                                      int trials, const LaunchOptions& options)
{
    if (workers < 1) {
        throw std::invalid_argument("time_kernel: workers must be >= 1");
    }
    if (trials < 1) {
        throw std::invalid_argument("time_kernel: trials must be >= 1");
    }
    const std::string digest = config_digest(id, cfg);
    std::vector<TimingRecord> records;
    records.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        try {
            const auto seconds = launch(
                workers,
                [&](WorkerCtx& ctx) -> double {
                    barrier(ctx);
                    const auto t0 = std::chrono::steady_clock::now();
                    run_kernel_once(ctx, id, cfg);
                    const auto t1 = std::chrono::steady_clock::now();
                    barrier(ctx);
                    return std::chrono::duration<double>(t1 - t0).count();
                },
                options);
            records.push_back(
                {id, workers, trial, std::max(seconds[0], 1e-9), digest});
        } catch (const std::exception& e) {
            throw std::runtime_error("time_kernel: trial " + std::to_string(trial)
                                     + " at P=" + std::to_string(workers) + " failed: "
                                     + e.what());
        }
    }
    return records;
}

std::vector<SpeedupRow> speedup_table(const std::vector<TimingRecord>& records,
                                      std::optional<double> declared_fraction)
{
    if (records.empty()) {
        throw std::invalid_argument("speedup_table: no records");
    }
    for (const auto& r : records) {
        if (r.config_digest != records.front().config_digest) {
            throw std::invalid_argument(
                "speedup_table: config digest mismatch, records are not comparable");
        }
    }
    std::map<int, std::pair<double, int>> groups; // P -> (time sum, trial count)
    for (const auto& r : records) {
        auto& g = groups[r.workers];
        g.first += r.wall_time_s;
        g.second += 1;
    }
    const auto baseline = groups.find(1);
    if (baseline == groups.end()) {
        throw std::invalid_argument("speedup_table: missing P=1 baseline records");
    }
    const double t1 = baseline->second.first / baseline->second.second;

    std::vector<SpeedupRow> rows;
    rows.reserve(groups.size());
    for (const auto& [workers, g] : groups) {
        SpeedupRow row;
        row.kernel = records.front().kernel;
        row.workers = workers;
        row.mean_time_s = g.first / g.second;
        row.speedup = t1 / row.mean_time_s;
        row.efficiency = row.speedup / workers;
        row.amdahl_bound = declared_fraction
            ? amdahl_speedup(*declared_fraction, workers)
            : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

ParallelFraction ParallelFraction::parse(const std::string& text)
{
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool any_digit = false;
    std::size_t i = 0;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        num = num * 10 + (text[i] - '0');
        any_digit = true;
        if (num > 1000000000000000000LL) {
            throw std::invalid_argument("fraction '" + text + "' has too many digits");
        }
    }
    if (i < text.size() && text[i] == '.') {
        ++i;
        for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            num = num * 10 + (text[i] - '0');
            den *= 10;
            any_digit = true;
            if (den > 100000000000000000LL) {
                throw std::invalid_argument("fraction '" + text + "' has too many digits");
            }
        }
    }
    if (!any_digit || i != text.size()) {
        throw std::invalid_argument("'" + text + "' is not a decimal fraction");
    }
    if (num > den) {
        throw std::invalid_argument("fraction '" + text + "' is outside [0, 1]");
    }
    return ParallelFraction{num, den};
}

ParallelFraction ParallelFraction::from_double(double f)
{
    if (!(f >= 0.0 && f <= 1.0)) {
        throw std::invalid_argument("fraction must be in [0, 1]");
    }
    return parse(format_g(f, 15));
}

double amdahl_limit(const ParallelFraction& f)
{
    if (f.num < 0 || f.num >= f.den) {
        throw std::invalid_argument("amdahl_limit: fraction must be in [0, 1)");
    }
    return static_cast<double>(f.den) / static_cast<double>(f.den - f.num);
}

double amdahl_limit(double f)
{
    if (!(f >= 0.0) || f >= 1.0) {
        throw std::invalid_argument("amdahl_limit: fraction must be in [0, 1)");
    }
    return static_cast<double>(1.0L / (1.0L - static_cast<long double>(f)));
}

double amdahl_speedup(const ParallelFraction& f, std::int64_t workers)
{
    if (f.num < 0 || f.num > f.den) {
        throw std::invalid_argument("amdahl_speedup: fraction must be in [0, 1]");
    }
    if (workers < 1) {
        throw std::invalid_argument("amdahl_speedup: workers must be >= 1");
    }
    const long double num = static_cast<long double>(f.num);
    const long double den = static_cast<long double>(f.den);
    const long double p = static_cast<long double>(workers);
    return static_cast<double>(den * p / ((den - num) * p + num));
}

double amdahl_speedup(double f, std::int64_t workers)
{
    if (!(f >= 0.0 && f <= 1.0)) {
        throw std::invalid_argument("amdahl_speedup: fraction must be in [0, 1]");
    }
    if (workers < 1) {
        throw std::invalid_argument("amdahl_speedup: workers must be >= 1");
    }
    const long double lf = static_cast<long double>(f);
    const long double p = static_cast<long double>(workers);
    return static_cast<double>(1.0L / ((1.0L - lf) + lf / p));
}

namespace {

constexpr const char* kReportHeader = "kernel,workers,mean_time_s,speedup,efficiency,amdahl_bound";

std::string g9(double v)
{
    return format_g(v, 9);
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& s, const std::string& what)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error("report: bad " + what + " field '" + s + "'");
    }
    return v;
}

} // namespace

std::string report_csv(const std::vector<SpeedupRow>& rows)
{
    std::string text = std::string(kReportHeader) + '\n';
    for (const auto& r : rows) {
        text += to_string(r.kernel) + ',' + std::to_string(r.workers) + ','
            + g9(r.mean_time_s) + ',' + g9(r.speedup) + ',' + g9(r.efficiency) + ','
            + g9(r.amdahl_bound) + '\n';
    }
    return text;
}

void write_report(const std::vector<SpeedupRow>& rows, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_report: cannot open " + path);
    }
    const std::string text = report_csv(rows);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("write_report: write to " + path + " failed");
    }
}

std::vector<SpeedupRow> read_report(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_report: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != kReportHeader) {
        throw std::runtime_error("read_report: missing or malformed header in " + path);
    }
    std::vector<SpeedupRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 6) {
            throw std::runtime_error("read_report: expected 6 fields, got "
                                     + std::to_string(fields.size()));
        }
        SpeedupRow r;
        r.kernel = kernel_from_string(fields[0]);
        r.workers = static_cast<int>(parse_double_field(fields[1], "workers"));
        r.mean_time_s = parse_double_field(fields[2], "mean_time_s");
        r.speedup = parse_double_field(fields[3], "speedup");
        r.efficiency = parse_double_field(fields[4], "efficiency");
        r.amdahl_bound = parse_double_field(fields[5], "amdahl_bound");
        rows.push_back(r);
    }
    return rows;
}

namespace {

void write_text_file(const std::string& text, const std::string& path, const char* what)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error(std::string(what) + ": cannot open " + path);
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error(std::string(what) + ": write to " + path + " failed");
    }
}

} // namespace

void write_matrix_csv(const RealMatrix& m, const std::string& path)
{
    std::string text;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                text += ',';
            }
            text += format_g(m(i, j), 17);
        }
        text += '\n';
    }
    write_text_file(text, path, "write_matrix_csv");
}

void write_curve_csv(const kernels::TransferCurve& curve, const std::string& path)
{
    if (curve.flux.size() != curve.voltage.size()) {
        throw std::invalid_argument("write_curve_csv: flux and voltage lengths differ");
    }
    std::string text = "flux,voltage\n";
    for (std::size_t i = 0; i < curve.flux.size(); ++i) {
        text += format_g(curve.flux[i], 17) + ',' + format_g(curve.voltage[i], 17) + '\n';
    }
    write_text_file(text, path, "write_curve_csv");
}

void write_series_csv(const std::vector<double>& values, const std::string& path)
{
    std::string text = "index,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        text += std::to_string(i) + ',' + format_g(values[i], 17) + '\n';
    }
    write_text_file(text, path, "write_series_csv");
}

// ---------------------------------------------------------------------------
// SVG emission. Everything below formats through fixed-precision helpers so
// identical rows produce an identical byte stream.
// ---------------------------------------------------------------------------

namespace {

std::string f2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Scale {
    double lo = 0.0;
    double hi = 1.0;
    double px_lo = 0.0;
    double px_hi = 1.0;

    double operator()(double v) const
    {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

} // namespace

void emit_plot(const std::vector<SpeedupRow>& rows, std::optional<double> declared_fraction,
               const std::string& path)
{
    std::vector<SpeedupRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const SpeedupRow& a, const SpeedupRow& b) { return a.workers < b.workers; });

    double max_time = 1e-12;
    double max_speedup = 1.0;
    double min_p = 1.0;
    double max_p = 2.0;
    if (!sorted.empty()) {
        min_p = sorted.front().workers;
        max_p = sorted.back().workers;
        for (const auto& r : sorted) {
            max_time = std::max(max_time, r.mean_time_s);
            max_speedup = std::max(max_speedup, r.speedup);
        }
    }
    if (declared_fraction) {
        max_speedup = std::max(max_speedup, amdahl_speedup(*declared_fraction,
                                                           static_cast<std::int64_t>(max_p)));
    }
    if (max_p <= min_p) {
        max_p = min_p + 1.0;
    }

    const Scale x{min_p, max_p, 80.0, 780.0};
    const Scale yt{0.0, max_time * 1.05, 460.0, 40.0};
    const Scale ys{0.0, max_speedup * 1.05, 460.0, 40.0};

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"520\" "
           "viewBox=\"0 0 860 520\">\n";
    svg += "<rect width=\"860\" height=\"520\" fill=\"white\"/>\n";
    svg += "<rect x=\"80\" y=\"40\" width=\"700\" height=\"420\" fill=\"none\" "
           "stroke=\"black\"/>\n";

    // Horizontal gridlines with tick labels on both vertical axes.
    for (int k = 0; k <= 5; ++k) {
        const double frac = k / 5.0;
        const double y = 460.0 - frac * 420.0;
        svg += "<line x1=\"80\" y1=\"" + f2(y) + "\" x2=\"780\" y2=\"" + f2(y)
            + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"74\" y=\"" + f2(y + 4) + "\" font-size=\"12\" text-anchor=\"end\">"
            + format_g(frac * max_time * 1.05, 3) + "</text>\n";
        svg += "<text x=\"786\" y=\"" + f2(y + 4) + "\" font-size=\"12\">"
            + format_g(frac * max_speedup * 1.05, 3) + "</text>\n";
    }
    // One tick per measured worker count.
    for (const auto& r : sorted) {
        const double px = x(r.workers);
        svg += "<line x1=\"" + f2(px) + "\" y1=\"460\" x2=\"" + f2(px)
            + "\" y2=\"466\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + f2(px) + "\" y=\"480\" font-size=\"12\" text-anchor=\"middle\">"
            + std::to_string(r.workers) + "</text>\n";
    }
    svg += "<text x=\"430\" y=\"505\" font-size=\"13\" text-anchor=\"middle\">workers "
           "(P)</text>\n";
    svg += "<text x=\"80\" y=\"28\" font-size=\"13\" fill=\"#1f77b4\">mean time (s)</text>\n";
    svg += "<text x=\"780\" y=\"28\" font-size=\"13\" fill=\"#d62728\" "
           "text-anchor=\"end\">speedup</text>\n";

    if (declared_fraction) {
        std::string pts;
        const int samples = 128;
        for (int k = 0; k <= samples; ++k) {
            const double p = min_p + (max_p - min_p) * k / samples;
            const double bound = 1.0 / ((1.0 - *declared_fraction) + *declared_fraction / p);
            pts += f2(x(p)) + "," + f2(ys(bound)) + " ";
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"#7f7f7f\" "
               "stroke-dasharray=\"6,4\"/>\n";
        svg += "<text x=\"430\" y=\"28\" font-size=\"12\" fill=\"#7f7f7f\" "
               "text-anchor=\"middle\">Amdahl bound (f="
            + format_g(*declared_fraction, 6) + ")</text>\n";
    }

    std::string time_pts;
    std::string speedup_pts;
    for (const auto& r : sorted) {
        time_pts += f2(x(r.workers)) + "," + f2(yt(r.mean_time_s)) + " ";
        speedup_pts += f2(x(r.workers)) + "," + f2(ys(r.speedup)) + " ";
    }
    if (sorted.size() > 1) {
        svg += "<polyline points=\"" + time_pts + "\" fill=\"none\" stroke=\"#1f77b4\" "
               "stroke-width=\"2\"/>\n";
        svg += "<polyline points=\"" + speedup_pts + "\" fill=\"none\" stroke=\"#d62728\" "
               "stroke-width=\"2\"/>\n";
    }
    for (const auto& r : sorted) {
        svg += "<circle cx=\"" + f2(x(r.workers)) + "\" cy=\"" + f2(yt(r.mean_time_s))
            + "\" r=\"4\" fill=\"#1f77b4\"/>\n";
        svg += "<rect x=\"" + f2(x(r.workers) - 3.5) + "\" y=\"" + f2(ys(r.speedup) - 3.5)
            + "\" width=\"7\" height=\"7\" fill=\"#d62728\"/>\n";
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("emit_plot: cannot open " + path);
    }
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) {
        throw std::runtime_error("emit_plot: write to " + path + " failed");
    }
}

} // namespace pargrid::bench
