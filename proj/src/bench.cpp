#include "softtopk/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "softtopk/halving_topk.hpp"
#include "softtopk/iterative_topk.hpp"
#include "softtopk/oracle_metrics.hpp"
#include "softtopk/parallel.hpp"

namespace softtopk {

namespace {

void log_line(const SweepConfig& cfg, const std::string& msg) {
    if (cfg.log) cfg.log(msg);
}

// Output paths must fail before any compute is spent.  Append mode keeps any
// existing file intact; the real emit truncates later.
void probe_writable(const std::string& path) {
    std::ofstream f(path, std::ios::app);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
}

template <std::floating_point T>
Matrix<T> forward_once(Algo algo, const Instance<T>& inst, std::size_t k, const SweepConfig& cfg) {
    switch (algo) {
        case Algo::iterative: {
            IterativeOptions<T> opts;
            opts.mode = cfg.mode;
            opts.alpha = static_cast<T>(cfg.alpha);
            return iterative_forward(inst.embeddings, inst.scores, k, opts).output;
        }
        case Algo::halving:
            return halving_forward(inst.embeddings, inst.scores, k, static_cast<T>(cfg.boost)).output;
        default:
            return exact_topk(inst.embeddings, inst.scores, k);
    }
}

template <std::floating_point T>
void run_pair(const SweepConfig& cfg, std::size_t n, std::size_t k, std::size_t workers,
              std::vector<BenchRecord>& records) {
    InstanceConfig icfg;
    icfg.n = n;
    icfg.k = k;
    icfg.d = cfg.d;
    icfg.batch = cfg.batch;
    // Independent substream per (seed, n, k) so adding grid points never
    // shifts the data of existing ones.
    icfg.seed = SplitMix64(cfg.seed ^ (static_cast<std::uint64_t>(n) << 32) ^
                           static_cast<std::uint64_t>(k))
                    .next_u64();
    icfg.boost = cfg.boost;
    icfg.mode = cfg.mode;

    const std::vector<Instance<T>> instances = generate_instance<T>(icfg);
    std::vector<Matrix<double>> references(cfg.batch);
    {
        // References come from the pre-narrowing double data so the f32 path
        // is still judged against the true selection.
        const std::vector<Instance<double>> wide = generate_instance<double>(icfg);
        parallel_for(cfg.batch, workers, [&](std::size_t b) {
            references[b] = exact_topk(wide[b].embeddings, wide[b].scores, k);
        });
    }

    for (Algo algo : cfg.algos) {
        // Warmup pass (never recorded); its outputs feed the nCCS statistics.
        std::vector<Matrix<double>> outputs(cfg.batch);
        Vector<double> scores(cfg.batch);
        parallel_for(cfg.batch, workers, [&](std::size_t b) {
            outputs[b] = to_double(forward_once<T>(algo, instances[b], k, cfg));
            scores[b] = nccs(references[b], outputs[b]);
        });
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(cfg.batch);
        double var = 0.0;
        for (double s : scores) var += (s - mean) * (s - mean);
        const double stddev = std::sqrt(var / static_cast<double>(cfg.batch));

        BenchRecord rec;
        rec.algo = algo;
        rec.n = n;
        rec.k = k;
        rec.d = cfg.d;
        rec.batch = cfg.batch;
        rec.boost = cfg.boost;
        rec.mode = cfg.mode;
        rec.seed = cfg.seed;
        rec.nccs_mean = mean;
        rec.nccs_std = stddev;
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            if (cfg.parallel_timing) {
                parallel_for(cfg.batch, workers,
                             [&](std::size_t b) { (void)forward_once<T>(algo, instances[b], k, cfg); });
            } else {
                for (std::size_t b = 0; b < cfg.batch; ++b)
                    (void)forward_once<T>(algo, instances[b], k, cfg);
            }
            const auto t1 = std::chrono::steady_clock::now();
            rec.repeat_index = r;
            rec.wall_time_s =
                std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-12);
            records.push_back(rec);
        }
        log_line(cfg, "bench n=" + std::to_string(n) + " k=" + std::to_string(k) + " algo=" +
                          to_string(algo) + " nccs=" + format_real(mean) + " last_time_s=" +
                          format_real(records.back().wall_time_s));
    }
}

}  // namespace

void validate(const SweepConfig& cfg) {
    if (cfg.n_list.empty() || cfg.k_list.empty())
        throw ConfigError("sweep requires non-empty n and k lists");
    for (std::size_t n : cfg.n_list)
        if (n < 2) throw ConfigError("sweep requires every n >= 2 (got n=" + std::to_string(n) + ")");
    for (std::size_t k : cfg.k_list)
        if (k < 1) throw ConfigError("sweep requires every k >= 1");
    if (cfg.d < 1) throw ConfigError("sweep requires d >= 1");
    if (cfg.batch < 1) throw ConfigError("sweep requires batch >= 1");
    if (!(cfg.boost > 0.0)) throw ConfigError("sweep requires boost > 0");
    if (!(cfg.alpha > 0.0)) throw ConfigError("sweep requires alpha > 0");
    if (cfg.repeats < 1) throw ConfigError("sweep requires repeats >= 1");
    if (cfg.algos.empty()) throw ConfigError("sweep requires at least one algo");
}

std::vector<BenchRecord> run_sweep(const SweepConfig& cfg) {
    validate(cfg);
    const std::size_t workers = resolve_worker_count(cfg.threads);
    if (!cfg.csv_path.empty()) probe_writable(cfg.csv_path);
    if (!cfg.charts_prefix.empty()) {
        probe_writable(cfg.charts_prefix + "time_vs_n.svg");
        probe_writable(cfg.charts_prefix + "nccs_vs_n.svg");
    }

    std::vector<BenchRecord> records;
    for (std::size_t n : cfg.n_list) {
        for (std::size_t k : cfg.k_list) {
            if (k >= n) {
                log_line(cfg, "skip n=" + std::to_string(n) + " k=" + std::to_string(k) +
                                  " (requires k < n)");
                continue;
            }
            if (cfg.use_float32)
                run_pair<float>(cfg, n, k, workers, records);
            else
                run_pair<double>(cfg, n, k, workers, records);
        }
    }
    return records;
}

std::string format_real(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

}  // namespace softtopk
