// SPDX-License-Identifier: Apache-2.0
//
// rsvlc - rate-splitting beamformer design for multi-LED visible light downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Successive convex approximation for difference-of-logs rate constraints over a lifted PSD
// matrix, plus rank-one beamformer recovery.

#include "rsvlc/entropy.hpp"
#include "rsvlc/lifting.hpp"
#include "rsvlc/rates.hpp"
#include "rsvlc/scenario.hpp"
#include "rsvlc/subproblem.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rsvlc
{
    // 1/2 log2(offset + Tr(W M))
    struct LogTerm
    {
        double offset = 1.0;
        Mat gain;

        double operator()(const Mat &W) const { return half_log2(offset + W.cwiseProduct(gain).sum()); }
        double operator()(const Vec &w) const { return half_log2(offset + w.dot(gain * w)); }
    };

    // L(W) = value + Tr(slope (W - W_m)): first-order expansion of a LogTerm at W_m. Since the log is
    // concave, L(W) >= LogTerm(W) everywhere.
    struct AffineLog
    {
        double value = 0.0;
        Mat slope;
        Mat expansion_point;

        double operator()(const Mat &W) const { return value + (W - expansion_point).cwiseProduct(slope).sum(); }
    };

    inline AffineLog linearize(const LogTerm &term, const Mat &W_m)
    {
        const double arg = term.offset + W_m.cwiseProduct(term.gain).sum();
        if (!(arg > 0.0))
            throw NumericalError("linearization point outside the log domain");
        return {half_log2(arg), term.gain / (arg * 2.0 * std::numbers::ln2), W_m};
    }

    struct UserLinearization
    {
        AffineLog private_part; // L_p,k: expansion of 1/2 log2(u_k + Tr W G_p_hat,k)
        AffineLog common_part;  // L_c,k: expansion of 1/2 log2(u_k + Tr W G_c_bar,k)
    };

    inline UserLinearization linearize(const LiftedOperators &L, const Mat &W_m, Index k)
    {
        if (k < 0 || k >= L.users)
            throw DimensionError("user index out of range");
        const double u = L.noise_terms[std::size_t(k)];
        return {linearize(LogTerm{u, L.G_p_hat[std::size_t(k)].dense()}, W_m),
                linearize(LogTerm{u, L.G_c_bar[std::size_t(k)].dense()}, W_m)};
    }

    // plus(W) - minus(W) >= rhs^T y
    struct DcConstraint
    {
        LogTerm plus;
        LogTerm minus;
        Vec rhs;
        std::string label;

        double lhs(const Mat &W) const { return plus(W) - minus(W); }
    };

    // maximize objective^T y subject to the DC constraints, the linear constraints and W >= 0.
    struct DcProgram
    {
        Index dimension = 0;
        Index num_scalars = 0;
        Vec objective;
        std::vector<DcConstraint> dc;
        std::vector<LinearConstraint> linear;
    };

    // Replaces every subtracted log by its expansion at W_m (an inner approximation).
    inline ConvexSubproblem convexify(const DcProgram &prog, const Mat &W_m)
    {
        ConvexSubproblem sub;
        sub.dimension = prog.dimension;
        sub.num_scalars = prog.num_scalars;
        sub.objective = prog.objective;
        for (const auto &c : prog.dc)
        {
            const AffineLog L = linearize(c.minus, W_m);
            LogConstraint lc;
            lc.offset = c.plus.offset;
            lc.gain = c.plus.gain;
            lc.linear_W = -L.slope;
            lc.linear_y = -c.rhs;
            lc.constant = -(L.value - W_m.cwiseProduct(L.slope).sum());
            lc.label = c.label;
            sub.log_constraints.push_back(std::move(lc));
        }
        sub.linear_constraints = prog.linear;
        return sub;
    }

    // Largest violation of the exact DC and linear constraints at (W, y), >= 0.
    inline double max_violation(const DcProgram &prog, const Mat &W, const Vec &y)
    {
        double v = 0.0;
        for (const auto &c : prog.dc)
            v = std::max(v, c.rhs.dot(y) - c.lhs(W));
        for (const auto &c : prog.linear)
            v = std::max(v, -evaluate(c, W, y));
        return v;
    }

    struct ScaOptions
    {
        int max_iter = 50;
        double stall_tol = 1e-4; // bits/s/Hz
        SubproblemTolerances subproblem{};
        std::uint64_t seed = 42;
        int randomizations = 100;
        int max_restarts = 5; // SCA restarts from an extracted point that beats the relaxed value
    };

    struct ScaIteration
    {
        int m = 0;
        double objective = 0.0;
        double max_violation = 0.0;
        double solve_seconds = 0.0;
        int newton_steps = 0;
    };

    struct ScaState
    {
        int iteration = 0;
        Mat expansion_point;
        std::vector<double> objective_trace;
        std::vector<Vec> share_trace; // scalar vector y per iteration
        std::vector<ScaIteration> records;
        std::string stop_reason;
    };

    struct ScaRun
    {
        ScaState state;
        SubproblemSolution solution;
    };

    // Iterates linearize -> solve until the objective gains less than stall_tol.
    inline ScaRun run_sca(const DcProgram &prog, const Mat &W0, const ScaOptions &opt = {})
    {
        if (W0.rows() != prog.dimension || W0.cols() != prog.dimension)
            throw DimensionError("initial point has the wrong dimension");
        check_psd(W0);

        ScaRun run;
        auto &st = run.state;
        st.expansion_point = W0;
        std::optional<std::pair<Mat, Vec>> hint;
        for (int m = 1; m <= opt.max_iter; ++m)
        {
            const auto t0 = std::chrono::steady_clock::now();
            const ConvexSubproblem sub = convexify(prog, st.expansion_point);
            SubproblemSolution sol = solve(sub, opt.subproblem, hint);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (sol.status == SolveStatus::infeasible)
                throw SolverError("SCA subproblem infeasible at iteration " + std::to_string(m), m);
            if (sol.status != SolveStatus::optimal)
                throw SolverError("SCA subproblem not certified at iteration " + std::to_string(m), m);

            st.iteration = m;
            st.objective_trace.push_back(sol.objective);
            st.share_trace.push_back(sol.y);
            st.records.push_back({m, sol.objective, max_violation(prog, sol.W, sol.y), secs, sol.newton_steps});
            st.expansion_point = sol.W;
            hint = std::pair{sol.W, sol.y};
            run.solution = std::move(sol);

            if (m > 1 && std::abs(st.objective_trace[std::size_t(m - 1)] - st.objective_trace[std::size_t(m - 2)]) < opt.stall_tol)
            {
                st.stop_reason = "converged";
                return run;
            }
        }
        st.stop_reason = "max-iter";
        return run;
    }

    // Peak and electrical power limits shared by all schemes, in a scheme's W coordinates.
    struct PowerLimits
    {
        Vec power_weights;   // diagonal of D
        std::vector<Vec> a;  // per-LED amplitude vectors
        double power_budget = 0.0;
        double peak_margin = 0.0;

        Index dimension() const { return power_weights.size(); }

        std::vector<LinearConstraint> constraints() const
        {
            std::vector<LinearConstraint> out;
            out.push_back({Mat(Mat(power_weights.asDiagonal()) * -1.0), Vec(), power_budget, "power"});
            for (std::size_t n = 0; n < a.size(); ++n)
                out.push_back({-a[n] * a[n].transpose(), Vec(), peak_margin * peak_margin, "peak_" + std::to_string(n)});
            return out;
        }

        // Normalized slacks: (P_t - P) / P_t and (margin - |a_n^T w|) / margin.
        std::pair<double, double> slacks(const Vec &w) const
        {
            const double P = w.cwiseProduct(w).dot(power_weights);
            double peak = 0.0;
            for (const auto &an : a)
                peak = std::max(peak, std::abs(an.dot(w)));
            return {(power_budget - P) / power_budget, (peak_margin - peak) / peak_margin};
        }

        // Largest factor keeping w feasible; scaling by it makes the tightest limit bind.
        double max_scale(const Vec &w) const
        {
            const double P = w.cwiseProduct(w).dot(power_weights);
            double peak = 0.0;
            for (const auto &an : a)
                peak = std::max(peak, std::abs(an.dot(w)));
            double s = std::numeric_limits<double>::infinity();
            if (P > 0.0)
                s = std::sqrt(power_budget / P);
            if (peak > 0.0)
                s = std::min(s, peak_margin / peak);
            return s;
        }
    };

    inline PowerLimits power_limits(const LiftedOperators &L)
    {
        return {L.power_weights(), L.a, L.power_budget, L.peak_margin};
    }

    // Restricts the limits to the listed streams (blocks of N entries).
    inline PowerLimits restrict_limits(const PowerLimits &full, Index leds, std::span<const Index> streams)
    {
        auto pick = [&](const Vec &v) {
            Vec r(Index(streams.size()) * leds);
            for (std::size_t j = 0; j < streams.size(); ++j)
                r.segment(Index(j) * leds, leds) = v.segment(streams[j] * leds, leds);
            return r;
        };
        PowerLimits out{pick(full.power_weights), {}, full.power_budget, full.peak_margin};
        for (const auto &an : full.a)
            out.a.push_back(pick(an));
        return out;
    }

    struct ExtractionReport
    {
        Vec eigenvalues;               // of W*, descending
        double rank_one_ratio = 0.0;   // lambda_2 / lambda_1
        Vec w_hat;                     // extracted stacked beamformer (scheme coordinates)
        double power_slack = 0.0;      // normalized, see PowerLimits::slacks
        double peak_slack = 0.0;
        double sum_rate = 0.0;         // achieved by w_hat
        int chosen_candidate = -1;     // 0 = principal eigenvector, >= 1 randomization sample
        bool zero = false;             // W* numerically rank zero
    };

    // Principal eigenvector plus seeded Gaussian randomization; every candidate is rescaled to its
    // binding limit and scored by `sum_rate_of`.
    inline ExtractionReport extract_rank_one(const Mat &W_star, const PowerLimits &limits,
                                             const std::function<double(const Vec &)> &sum_rate_of, std::uint64_t seed = 42,
                                             int randomizations = 100)
    {
        const Index n = W_star.rows();
        if (limits.dimension() != n)
            throw DimensionError("extract_rank_one: limits and matrix dimensions differ");
        check_psd(W_star);

        ExtractionReport rep;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (W_star + W_star.transpose()));
        rep.eigenvalues = es.eigenvalues().reverse();
        const Mat U = es.eigenvectors().rowwise().reverse();
        const double l1 = std::max(rep.eigenvalues(0), 0.0);
        rep.rank_one_ratio = n > 1 && l1 > 0.0 ? std::max(rep.eigenvalues(1), 0.0) / l1 : 0.0;

        if (W_star.trace() < 1e-12 * std::max(1.0, limits.power_budget / std::max(limits.power_weights.maxCoeff(), 1e-300)))
        {
            rep.zero = true;
            rep.w_hat = Vec::Zero(n);
            rep.sum_rate = sum_rate_of(rep.w_hat);
            std::tie(rep.power_slack, rep.peak_slack) = limits.slacks(rep.w_hat);
            return rep;
        }

        // eigenvalues at round-off level would otherwise add sqrt(eps)-sized noise to the samples
        const Vec sqrt_l = rep.eigenvalues.unaryExpr([l1](double l) { return l > 1e-12 * l1 ? std::sqrt(l) : 0.0; });
        auto finalize = [&](Vec w) {
            const double s = limits.max_scale(w);
            if (std::isfinite(s))
                w *= s * (1.0 - 1e-12);
            return w;
        };

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c <= randomizations; ++c)
        {
            Vec w;
            if (c == 0)
                w = sqrt_l(0) * U.col(0);
            else
            {
                Vec xi(n);
                for (Index i = 0; i < n; ++i)
                    xi(i) = normal(rng);
                w = U * sqrt_l.cwiseProduct(xi);
            }
            w = finalize(std::move(w));
            const double r = sum_rate_of(w);
            if (r > best)
            {
                best = r;
                rep.w_hat = w;
                rep.chosen_candidate = c;
            }
        }
        rep.sum_rate = best;
        std::tie(rep.power_slack, rep.peak_slack) = limits.slacks(rep.w_hat);
        return rep;
    }

    // SCA followed by extraction. W* is only a stationary point, so an extracted rank-one point can
    // beat the relaxed value at W*; it is then a better feasible point of the relaxation and SCA is
    // restarted from it. Rounds repeat until the achieved rate is within `bound_tol` of the relaxed value.
    struct ScaPipeline
    {
        const DcProgram *program = nullptr;
        PowerLimits limits;
        std::function<double(const Mat &)> relaxed_value;
        std::function<double(const Vec &, const SubproblemSolution &)> sum_rate_of;
        double bound_tol = 1e-7;
    };

    struct PipelineRun
    {
        ScaRun run;        // merged trace over all rounds; solution of the last round
        ExtractionReport extraction;
        double relaxed = 0.0; // relaxed_value at the last W*
        int restarts = 0;
    };

    inline PipelineRun run_pipeline(const ScaPipeline &p, Mat W0, const ScaOptions &opt = {})
    {
        PipelineRun out;
        auto &merged = out.run.state;
        for (int round = 0;; ++round)
        {
            ScaRun run = run_sca(*p.program, W0, opt);
            for (std::size_t i = 0; i < run.state.records.size(); ++i)
            {
                ScaIteration r = run.state.records[i];
                r.m = int(merged.records.size()) + 1;
                merged.records.push_back(r);
                merged.objective_trace.push_back(run.state.objective_trace[i]);
                merged.share_trace.push_back(run.state.share_trace[i]);
            }
            merged.iteration = int(merged.records.size());
            merged.expansion_point = run.state.expansion_point;
            merged.stop_reason = run.state.stop_reason;
            out.run.solution = std::move(run.solution);
            out.restarts = round;

            const SubproblemSolution &sol = out.run.solution;
            out.extraction = extract_rank_one(sol.W, p.limits, [&](const Vec &w) { return p.sum_rate_of(w, sol); }, opt.seed,
                                              opt.randomizations);
            out.relaxed = p.relaxed_value(sol.W);
            if (out.extraction.sum_rate <= out.relaxed + p.bound_tol || round >= opt.max_restarts || out.extraction.zero)
                return out;
            W0 = out.extraction.w_hat * out.extraction.w_hat.transpose();
        }
    }

    // ---------------------------------------------------------------- RSMA

    inline Mat dense(const KroneckerGain &G) { return G.dense(); }

    // Lifted sum-rate program with scalars y = [t_1..t_K, c_1..c_K]:
    //   1/2 log2(u_k + Tr W G_c_hat,k) - 1/2 log2(u_k + Tr W G_p_hat,k) >= t_k - c_k
    //   1/2 log2(u_k + Tr W G_c,k)     - 1/2 log2(u_k + Tr W G_c_bar,k) >= sum_j c_j
    //   Tr(W D) <= P_t,  Tr(W a_n a_n^T) <= min{b, I_H - b}^2,  c >= 0
    inline DcProgram rsma_program(const LiftedOperators &L)
    {
        const Index K = L.users;
        DcProgram prog;
        prog.dimension = L.dimension();
        prog.num_scalars = 2 * K;
        prog.objective = Vec::Zero(2 * K);
        prog.objective.head(K).setOnes();
        for (Index k = 0; k < K; ++k)
        {
            const double u = L.noise_terms[std::size_t(k)];
            Vec rp = Vec::Zero(2 * K);
            rp(k) = 1.0;
            rp(K + k) = -1.0;
            prog.dc.push_back({{u, dense(L.G_c_hat[std::size_t(k)])}, {u, dense(L.G_p_hat[std::size_t(k)])}, rp,
                               "private_" + std::to_string(k)});
            Vec rc = Vec::Zero(2 * K);
            rc.tail(K).setOnes();
            prog.dc.push_back({{u, dense(L.G_c[std::size_t(k)])}, {u, dense(L.G_c_bar[std::size_t(k)])}, rc,
                               "common_" + std::to_string(k)});
        }
        prog.linear = power_limits(L).constraints();
        for (Index k = 0; k < K; ++k)
        {
            Vec h = Vec::Zero(2 * K);
            h(K + k) = 1.0;
            prog.linear.push_back({Mat(), h, 0.0, "share_" + std::to_string(k)});
        }
        return prog;
    }

    // Stacks unit beams for the listed streams (0 = common, k + 1 = private of user k): private beams
    // follow g_k, the common beam follows sum_k g_k / ||g_k||. Scaled by 0.9 of the largest feasible
    // factor of `limits` (given in the same coordinates).
    inline Vec initial_beams(const ChannelMatrix &ch, const PowerLimits &limits, std::span<const Index> streams)
    {
        const Index K = ch.num_users(), N = ch.num_leds();
        if (ch.gains.cwiseAbs().maxCoeff() <= 0.0)
            throw DegenerateGeometryError("all channel gains are zero");

        Vec common = Vec::Zero(N);
        for (Index k = 0; k < K; ++k)
        {
            const double nk = ch.gains.row(k).norm();
            if (nk > 0.0)
                common += ch.row(k) / nk;
        }
        common /= common.norm();

        Vec w(Index(streams.size()) * N);
        for (std::size_t j = 0; j < streams.size(); ++j)
        {
            const Index s = streams[j];
            Vec b = common;
            if (s > 0)
            {
                const double nk = ch.gains.row(s - 1).norm();
                if (nk > 0.0)
                    b = ch.row(s - 1) / nk;
            }
            w.segment(Index(j) * N, N) = b;
        }
        // power <= 0.9 P_t and |a_n^T w| <= 0.9 min{b, I_H - b}
        const double P = w.cwiseProduct(w).dot(limits.power_weights);
        double peak = 0.0;
        for (const auto &an : limits.a)
            peak = std::max(peak, std::abs(an.dot(w)));
        double s = std::sqrt(0.9 * limits.power_budget / P);
        if (peak > 0.0)
            s = std::min(s, 0.9 * limits.peak_margin / peak);
        return s * w;
    }

    // W^[0] = w0 w0^T for the RSMA lifting.
    inline Mat initialize(const ScenarioConfig &cfg, const ChannelMatrix &ch, std::span<const EntropyParams> entropy)
    {
        const LiftedOperators L = build_lifted(ch, entropy, cfg);
        std::vector<Index> streams(std::size_t(L.users + 1));
        std::iota(streams.begin(), streams.end(), Index{0});
        const Vec w0 = initial_beams(ch, power_limits(L), streams);
        return w0 * w0.transpose();
    }

    // Sum rate of the RSMA rate region at W: sum_k max(0, P_k(W)) + max(0, min_k C_k(W)).
    inline double rsma_relaxed_value(const LiftedOperators &L, const Mat &W)
    {
        const QuadraticForms q = quadratic_forms(L, W);
        double priv = 0.0, common = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < L.users; ++k)
        {
            priv += std::max(0.0, lifted_private_rate(L, q.users[std::size_t(k)], k));
            common = std::min(common, lifted_common_rate(L, q.users[std::size_t(k)], k));
        }
        return priv + std::max(0.0, common);
    }

    struct SchemeResult
    {
        ScaState state;
        SubproblemSolution solution;  // last subproblem
        ExtractionReport extraction;
        BeamformerSet beams;          // w_0..w_K (zero common beam for baselines)
        RateAllocation rates;         // RSMA accounting of `beams` (shares zero for baselines)
        std::vector<double> user_rates; // scheme's own per-user rates
        double sum_rate = 0.0;
        double sdr_objective = 0.0;     // relaxed rate region value at W*
        double subproblem_objective = 0.0;
        int restarts = 0;               // SCA restarts from extracted points
    };

    inline std::vector<double> noise_of(const ScenarioConfig &cfg) { return cfg.noise_variance; }

    // Full RSMA pipeline: lift, SCA from `initialize`, rank-one extraction, rate accounting.
    inline SchemeResult sca_solve(const ScenarioConfig &cfg, const ChannelMatrix &ch, std::span<const EntropyParams> entropy,
                                  const ScaOptions &opt = {})
    {
        const LiftedOperators L = build_lifted(ch, entropy, cfg);
        const DcProgram prog = rsma_program(L);
        const Index K = L.users, N = L.leds;

        // shares from the subproblem, projected onto the common rate of the candidate
        auto rates_of = [&](const Vec &w, const SubproblemSolution &sol) {
            const BeamformerSet b = BeamformerSet::from_stacked(w, N);
            const RateAllocation probe = rsma_rates(ch, b, std::vector<double>(std::size_t(K), 0.0), entropy, cfg.noise_variance);
            const Vec shares = sol.y.tail(K);
            const std::vector<double> c(shares.data(), shares.data() + K);
            return rsma_rates(ch, b, project_shares(c, probe.common_rate), entropy, cfg.noise_variance);
        };
        ScaPipeline pipe{&prog, power_limits(L), [&](const Mat &W) { return rsma_relaxed_value(L, W); },
                         [&](const Vec &w, const SubproblemSolution &sol) { return rates_of(w, sol).sum_rate(); }};
        PipelineRun pr = run_pipeline(pipe, initialize(cfg, ch, entropy), opt);

        SchemeResult res;
        res.extraction = pr.extraction;
        res.beams = BeamformerSet::from_stacked(res.extraction.w_hat, N);
        res.rates = rates_of(res.extraction.w_hat, pr.run.solution);
        res.user_rates = res.rates.user_rates;
        res.sum_rate = res.rates.sum_rate();
        res.sdr_objective = pr.relaxed;
        res.subproblem_objective = pr.run.solution.objective;
        res.restarts = pr.restarts;
        res.state = std::move(pr.run.state);
        res.solution = std::move(pr.run.solution);
        return res;
    }

    // One JSON object per line: {"m":..,"objective":..,"max_violation":..,"solve_seconds":..}
    inline void write_trace(std::ostream &os, const ScaState &st)
    {
        const auto old = os.precision(17);
        for (const auto &r : st.records)
            os << "{\"m\":" << r.m << ",\"objective\":" << r.objective << ",\"max_violation\":" << r.max_violation
               << ",\"solve_seconds\":" << r.solve_seconds << ",\"newton_steps\":" << r.newton_steps << "}\n";
        os.precision(old);
    }
}
