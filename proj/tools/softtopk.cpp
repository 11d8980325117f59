#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softtopk/bench.hpp"
#include "softtopk/gradcheck_suite.hpp"

namespace {

using namespace softtopk;

// Accepts "16,32,64" or a power range "16:16384:x2".
std::vector<std::size_t> parse_size_list(const std::string& text) {
    auto bad = [&](const std::string& why) {
        return ConfigError("bad count list '" + text + "': " + why);
    };
    auto to_count = [&](const std::string& s) -> std::size_t {
        try {
            std::size_t pos = 0;
            const unsigned long long v = std::stoull(s, &pos);
            if (pos != s.size() || s.empty()) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw bad("'" + s + "' is not a positive integer");
        }
    };

    std::vector<std::size_t> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : text) {
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3 || parts[2].empty() || parts[2][0] != 'x')
            throw bad("expected min:max:xSTEP");
        const std::size_t lo = to_count(parts[0]);
        const std::size_t hi = to_count(parts[1]);
        const std::size_t step = to_count(parts[2].substr(1));
        if (lo < 1 || hi < lo || step < 2) throw bad("need 1 <= min <= max and step >= 2");
        for (std::size_t v = lo; v <= hi; v *= step) {
            out.push_back(v);
            if (v > hi / step) break;
        }
        return out;
    }
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(to_count(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(to_count(cur));
    return out;
}

std::vector<Algo> parse_algo_list(const std::string& text) {
    std::vector<Algo> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(algo_from_string(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (out.empty()) throw ConfigError("bad algo list '" + text + "'");
    return out;
}

void print_matrix(const std::string& name, const Matrix<double>& m) {
    std::printf("%s (%zux%zu):\n", name.c_str(), m.rows, m.cols);
    const std::size_t show = std::min<std::size_t>(m.cols, 8);
    for (std::size_t i = 0; i < m.rows; ++i) {
        std::printf("  [%2zu]", i);
        for (std::size_t j = 0; j < show; ++j) std::printf(" % .4f", m(i, j));
        std::printf("%s\n", show < m.cols ? " ..." : "");
    }
}

struct BenchArgs {
    std::string n_text = "16:16384:x2";
    std::string k_text = "2:2048:x2";
    std::string algos_text = "iterative,halving,exact";
    std::string mode_text = "verbatim";
    SweepConfig cfg;
    bool quiet = false;
};

int run_bench(BenchArgs& args) {
    args.cfg.n_list = parse_size_list(args.n_text);
    args.cfg.k_list = parse_size_list(args.k_text);
    args.cfg.algos = parse_algo_list(args.algos_text);
    args.cfg.mode = peaked_mode_from_string(args.mode_text);
    if (!args.quiet) args.cfg.log = [](const std::string& s) { std::cerr << s << "\n"; };

    const std::vector<BenchRecord> records = run_sweep(args.cfg);
    if (records.empty())
        throw SizeError("sweep produced no records: every (n, k) pair has k >= n");
    if (!args.cfg.csv_path.empty()) emit_csv(records, args.cfg.csv_path);
    if (!args.cfg.charts_prefix.empty()) emit_charts(records, args.cfg.charts_prefix);

    std::printf("%zu records", records.size());
    if (!args.cfg.csv_path.empty()) std::printf(", csv: %s", args.cfg.csv_path.c_str());
    if (!args.cfg.charts_prefix.empty())
        std::printf(", charts: %stime_vs_n.svg %snccs_vs_n.svg", args.cfg.charts_prefix.c_str(),
                    args.cfg.charts_prefix.c_str());
    std::printf("\n");
    return 0;
}

struct GradArgs {
    std::string op_text;
    std::string n_text = "8,16";
    std::string k_text = "2,4";
    std::string mode_text = "verbatim";
    GradSuiteConfig cfg;
};

int run_gradcheck(GradArgs& args) {
    args.cfg.op = algo_from_string(args.op_text);
    args.cfg.n_list = parse_size_list(args.n_text);
    args.cfg.k_list = parse_size_list(args.k_text);
    args.cfg.mode = peaked_mode_from_string(args.mode_text);

    const GradSuiteReport rep = run_gradcheck_suite(args.cfg);
    std::printf("op=%s checked=%zu skipped=%zu coordinates=%zu\n", to_string(args.cfg.op).c_str(),
                rep.checked, rep.skipped, rep.worst.coordinates_checked);
    std::printf("max_rel_error=%s (tol %s) worst=%s\n", format_real(rep.worst.max_rel_error).c_str(),
                format_real(rep.worst.tolerance).c_str(),
                rep.worst.worst_coordinate.empty() ? "-" : rep.worst.worst_coordinate.c_str());
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 3;
}

struct DemoArgs {
    std::size_t n = 8;
    std::size_t k = 2;
    std::size_t d = 4;
    double boost = 100.0;
    double alpha = 50.0;
    std::string mode_text = "verbatim";
    std::uint64_t seed = 7;
};

int run_demo(const DemoArgs& args) {
    InstanceConfig icfg;
    icfg.n = args.n;
    icfg.k = args.k;
    icfg.d = args.d;
    icfg.batch = 1;
    icfg.seed = args.seed;
    icfg.boost = args.boost;
    icfg.mode = peaked_mode_from_string(args.mode_text);
    const Instance<double> inst = std::move(generate_instance<double>(icfg)[0]);

    std::printf("instance: n=%zu k=%zu d=%zu seed=%llu boost=%s mode=%s\n", args.n, args.k, args.d,
                static_cast<unsigned long long>(args.seed), format_real(args.boost).c_str(),
                icfg.mode == PeakedMode::verbatim ? "verbatim" : "normalized");
    print_matrix("E", inst.embeddings);
    std::printf("v:");
    for (double s : inst.scores) std::printf(" %.4f", s);
    std::printf("\n\n");

    IterativeOptions<double> opts;
    opts.mode = icfg.mode;
    opts.alpha = args.alpha;
    const auto iter = iterative_forward(inst.embeddings, inst.scores, args.k, opts);
    const auto& itape = std::get<IterativeTape<double>>(iter.tape);
    std::printf("iterative forward:\n");
    for (std::size_t i = 0; i < itape.steps.size(); ++i) {
        const auto& st = itape.steps[i];
        std::printf("  step %zu: argmax=%zu max=%.4f%s weights:", i, st.masked_index,
                    st.pre_mask_max, st.clamped ? " (clamped)" : "");
        for (double w : st.weights) std::printf(" %.3g", w);
        std::printf("\n");
    }
    print_matrix("iterative output", iter.output);

    const auto halv = halving_forward(inst.embeddings, inst.scores, args.k, args.boost);
    const auto& htape = std::get<HalvingTape<double>>(halv.tape);
    std::printf("\nhalving forward: padded n=%zu rounds=%zu\n", htape.pad.padded_n,
                htape.rounds.size());
    for (std::size_t r = 0; r < htape.rounds.size(); ++r) {
        const auto& round = htape.rounds[r];
        std::printf("  round %zu: perm:", r);
        for (std::size_t p : round.perm) std::printf(" %zu", p);
        std::printf("  pair w0:");
        for (const auto& [w0, w1] : round.pair_weights) std::printf(" %.3g", w0);
        std::printf("\n");
    }
    print_matrix("halving output", halv.output);

    const Matrix<double> exact = exact_topk(inst.embeddings, inst.scores, args.k);
    print_matrix("\nexact top-k", exact);
    std::printf("nccs iterative=%.6f halving=%.6f\n", nccs(exact, iter.output),
                nccs(exact, halv.output));

    const Matrix<double> probe(args.k, args.d, 1.0);
    const auto gi = iterative_backward(itape, probe);
    const auto gh = halving_backward(htape, probe);
    std::printf("\nbackward with all-ones upstream:\n  iterative dv:");
    for (double g : gi.dv) std::printf(" %.4g", g);
    std::printf("\n  halving   dv:");
    for (double g : gh.dv) std::printf(" %.4g", g);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"softtopk: differentiable top-k selection (iterative and successive-halving)"};
    app.require_subcommand(1);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "sweep n/k, time operators, write CSV and charts");
    bench->add_option("--n", bench_args.n_text, "n values: comma list or min:max:xSTEP")
        ->capture_default_str();
    bench->add_option("--k", bench_args.k_text, "k values: comma list or min:max:xSTEP")
        ->capture_default_str();
    bench->add_option("--d", bench_args.cfg.d, "embedding dimension")->capture_default_str();
    bench->add_option("--batch", bench_args.cfg.batch, "instances per measurement")
        ->capture_default_str();
    bench->add_option("--boost", bench_args.cfg.boost, "halving boost factor C")
        ->capture_default_str();
    bench->add_option("--mode", bench_args.mode_text, "peaked softmax mode: verbatim|normalized")
        ->capture_default_str();
    bench->add_option("--alpha", bench_args.cfg.alpha, "normalized-mode sharpness")
        ->capture_default_str();
    bench->add_option("--seed", bench_args.cfg.seed, "base RNG seed")->capture_default_str();
    bench->add_option("--repeats", bench_args.cfg.repeats, "timed repeats per configuration")
        ->capture_default_str();
    bench->add_option("--algos", bench_args.algos_text, "comma list of iterative,halving,exact")
        ->capture_default_str();
    bench->add_option("--csv", bench_args.cfg.csv_path, "CSV output path");
    bench->add_option("--charts", bench_args.cfg.charts_prefix, "SVG output path prefix");
    bench->add_option("--threads", bench_args.cfg.threads,
                      "worker pool size (0 = auto; SOFTTOPK_THREADS overrides)")
        ->capture_default_str();
    bench->add_flag("--parallel-timing", bench_args.cfg.parallel_timing,
                    "parallelise the timed loop too (throughput mode)");
    bench->add_flag("--f32", bench_args.cfg.use_float32, "run operators in float32");
    bench->add_flag("--quiet", bench_args.quiet, "suppress progress lines on stderr");

    GradArgs grad_args;
    auto* grad = app.add_subcommand("gradcheck", "compare analytic gradients to finite differences");
    grad->add_option("--op", grad_args.op_text, "operator: iterative|halving")->required();
    grad->add_option("--n", grad_args.n_text, "n values to cycle")->capture_default_str();
    grad->add_option("--k", grad_args.k_text, "k values to cycle")->capture_default_str();
    grad->add_option("--d", grad_args.cfg.d, "embedding dimension")->capture_default_str();
    grad->add_option("--boost", grad_args.cfg.boost, "halving boost factor C")
        ->capture_default_str();
    grad->add_option("--mode", grad_args.mode_text, "peaked softmax mode")->capture_default_str();
    grad->add_option("--alpha", grad_args.cfg.alpha, "normalized-mode sharpness")
        ->capture_default_str();
    grad->add_option("--seed", grad_args.cfg.seed, "base RNG seed")->capture_default_str();
    grad->add_option("--instances", grad_args.cfg.instances, "checked instances target")
        ->capture_default_str();
    grad->add_option("--fd-h", grad_args.cfg.h, "finite difference step")->capture_default_str();
    grad->add_option("--tol", grad_args.cfg.tolerance, "max relative error to pass")
        ->capture_default_str();
    grad->add_option("--min-gap", grad_args.cfg.min_gap, "skip instances with tighter score gaps")
        ->capture_default_str();
    grad->add_option("--round-min-gap", grad_args.cfg.round_min_gap,
                     "skip instances with tighter per-round gaps (halving)")
        ->capture_default_str();

    DemoArgs demo_args;
    auto* demo = app.add_subcommand("demo", "print a worked forward/backward trace");
    demo->add_option("--n", demo_args.n, "rows")->capture_default_str();
    demo->add_option("--k", demo_args.k, "selection size")->capture_default_str();
    demo->add_option("--d", demo_args.d, "embedding dimension")->capture_default_str();
    demo->add_option("--boost", demo_args.boost, "halving boost factor C")->capture_default_str();
    demo->add_option("--alpha", demo_args.alpha, "normalized-mode sharpness")->capture_default_str();
    demo->add_option("--mode", demo_args.mode_text, "peaked softmax mode")->capture_default_str();
    demo->add_option("--seed", demo_args.seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (bench->parsed()) return run_bench(bench_args);
        if (grad->parsed()) return run_gradcheck(grad_args);
        return run_demo(demo_args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
