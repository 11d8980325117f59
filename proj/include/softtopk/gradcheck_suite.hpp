#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "softtopk/bench.hpp"
#include "softtopk/halving_topk.hpp"
#include "softtopk/iterative_topk.hpp"
#include "softtopk/oracle_metrics.hpp"
#include "softtopk/rng.hpp"

namespace softtopk {

inline DiffOperator make_iterative_operator(const IterativeOptions<double>& opts = {}) {
    return {[opts](const Matrix<double>& e, const Vector<double>& v, std::size_t k) {
                return iterative_forward(e, v, k, opts);
            },
            [](const Tape<double>& tape, const Matrix<double>& upstream) {
                return iterative_backward(std::get<IterativeTape<double>>(tape), upstream);
            }};
}

inline DiffOperator make_halving_operator(double boost) {
    return {[boost](const Matrix<double>& e, const Vector<double>& v, std::size_t k) {
                return halving_forward(e, v, k, boost);
            },
            [](const Tape<double>& tape, const Matrix<double>& upstream) {
                return halving_backward(std::get<HalvingTape<double>>(tape), upstream);
            }};
}

struct GradSuiteConfig {
    Algo op = Algo::halving;  // iterative or halving
    std::vector<std::size_t> n_list = {8, 16};
    std::vector<std::size_t> k_list = {2, 4};
    std::size_t d = 4;
    double boost = 5.0;
    PeakedMode mode = PeakedMode::verbatim;
    double alpha = 50.0;
    std::uint64_t seed = 0;
    std::size_t instances = 200;  // target number of checked instances
    double h = 1e-6;
    double tolerance = 1e-5;
    // Instances whose score ordering could flip under a +/-h probe are
    // skipped: a crossing makes the loss non-differentiable there and the
    // central difference meaningless.  3e-6 leaves slack above 2h.
    double min_gap = 3e-6;
    // Same guard for the intermediate sort keys of the halving rounds, where
    // a probe step is amplified by up to a few boosted-softmax factors.
    double round_min_gap = 1e-4;
};

struct GradSuiteReport {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    GradCheckReport worst;  // max over all checked instances
    bool pass = false;
};

namespace detail {

// Minimum adjacent gap among input-dependent sort keys.  Padding rows carry
// the constant kPadScore through every round (ties among them never move
// under perturbation), so those values are excluded.
inline double min_gap_ignoring_pads(const Vector<double>& scores) {
    Vector<double> live;
    live.reserve(scores.size());
    for (double s : scores)
        if (s != kPadScore<double>) live.push_back(s);
    return min_pairwise_gap(live);
}

}  // namespace detail

inline GradSuiteReport run_gradcheck_suite(const GradSuiteConfig& cfg) {
    if (cfg.op == Algo::exact)
        throw ConfigError("gradcheck supports ops 'iterative' and 'halving' only");
    if (cfg.n_list.empty() || cfg.k_list.empty())
        throw ConfigError("gradcheck requires non-empty n and k lists");
    if (cfg.instances < 1) throw ConfigError("gradcheck requires instances >= 1");
    if (!(cfg.tolerance > 0.0)) throw ConfigError("gradcheck requires tol > 0");

    const DiffOperator op =
        cfg.op == Algo::iterative
            ? make_iterative_operator(IterativeOptions<double>{cfg.mode, 1e-12, cfg.alpha, -10000.0})
            : make_halving_operator(cfg.boost);

    GradSuiteReport rep;
    rep.worst.tolerance = cfg.tolerance;
    SplitMix64 seeder(cfg.seed);
    const std::size_t max_attempts = cfg.instances * 5;
    for (std::size_t attempt = 0; attempt < max_attempts && rep.checked < cfg.instances; ++attempt) {
        const std::uint64_t instance_seed = seeder.next_u64();
        const std::uint64_t probe_seed = seeder.next_u64();
        const std::size_t n = cfg.n_list[attempt % cfg.n_list.size()];
        const std::size_t k = cfg.k_list[(attempt / cfg.n_list.size()) % cfg.k_list.size()];
        if (k > n) continue;

        InstanceConfig icfg;
        icfg.n = n;
        icfg.k = k;
        icfg.d = cfg.d;
        icfg.batch = 1;
        icfg.seed = instance_seed;
        icfg.boost = cfg.boost;
        icfg.mode = cfg.mode;
        const Instance<double> inst = std::move(generate_instance<double>(icfg)[0]);

        if (min_pairwise_gap(inst.scores) <= cfg.min_gap) {
            ++rep.skipped;
            continue;
        }
        if (cfg.op == Algo::halving) {
            const auto sel = halving_forward(inst.embeddings, inst.scores, k, cfg.boost);
            const auto& tape = std::get<HalvingTape<double>>(sel.tape);
            bool tight = false;
            for (const auto& round : tape.rounds)
                if (detail::min_gap_ignoring_pads(round.scores_before) <= cfg.round_min_gap) {
                    tight = true;
                    break;
                }
            if (tight) {
                ++rep.skipped;
                continue;
            }
        }

        SplitMix64 prng(probe_seed);
        Matrix<double> probe(k, cfg.d);
        for (auto& p : probe.data) p = prng.next_signed_unit();

        const GradCheckReport r =
            gradcheck_operator(op, inst.embeddings, inst.scores, k, probe, cfg.h, cfg.tolerance);
        if (r.max_rel_error > rep.worst.max_rel_error) {
            rep.worst.max_rel_error = r.max_rel_error;
            rep.worst.worst_coordinate =
                "instance " + std::to_string(rep.checked) + " (n=" + std::to_string(n) +
                ", k=" + std::to_string(k) + "): " + r.worst_coordinate;
        }
        rep.worst.coordinates_checked += r.coordinates_checked;
        ++rep.checked;
    }
    rep.worst.pass = rep.worst.max_rel_error < cfg.tolerance;
    rep.pass = rep.worst.pass && rep.checked >= cfg.instances;
    return rep;
}

}  // namespace softtopk
