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

// SDMA and NOMA designs under the same peak and electrical power limits as RSMA. Both use the
// private streams only (W over K N dimensions) and the same SCA machinery.
//
//   SDMA: user k decodes its own stream treating every other private stream as noise.
//   NOMA: users are ranked by ||g_k||; a user decodes and cancels the streams of all weaker users
//         before its own, so stream k must be decodable at user k and at every stronger user, with
//         the streams of strictly stronger users as interference.

#include "rsvlc/sca.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace rsvlc
{
    enum class Scheme
    {
        rsma,
        sdma,
        noma
    };

    inline const char *to_string(Scheme s)
    {
        switch (s)
        {
        case Scheme::rsma: return "rsma";
        case Scheme::sdma: return "sdma";
        case Scheme::noma: return "noma";
        }
        return "?";
    }

    inline Scheme parse_scheme(const std::string &s)
    {
        if (s == "rsma")
            return Scheme::rsma;
        if (s == "sdma")
            return Scheme::sdma;
        if (s == "noma")
            return Scheme::noma;
        throw Error("unknown scheme '" + s + "' (expected rsma, sdma or noma)");
    }

    struct BaselineResult
    {
        Scheme scheme = Scheme::sdma;
        SchemeResult result;
        std::vector<Index> strength_order; // NOMA: users by ||g_k|| descending
        double decodability_slack = 0.0;   // NOMA: min over decoders of exact rate minus assigned rate at W*
    };

    namespace detail
    {
        inline std::vector<Index> private_streams(Index K)
        {
            std::vector<Index> s(static_cast<std::size_t>(K));
            std::iota(s.begin(), s.end(), Index{1});
            return s;
        }

        // Weighted Kronecker gain over the private streams of receiver `rx`; weights indexed by user.
        inline Mat private_gain(const ChannelMatrix &ch, Index rx, const Vec &user_weights)
        {
            return KroneckerGain{user_weights, ch.row(rx)}.dense();
        }

        // Scalar y_k is bounded only by DC constraints with rhs e_k: value = sum_k max(0, min lhs).
        inline double per_scalar_value(const DcProgram &prog, const Mat &W)
        {
            Vec best = Vec::Constant(prog.num_scalars, std::numeric_limits<double>::infinity());
            for (const auto &c : prog.dc)
            {
                Index k;
                c.rhs.maxCoeff(&k);
                best(k) = std::min(best(k), c.lhs(W));
            }
            return best.cwiseMax(0.0).sum();
        }

        inline BeamformerSet with_zero_common(const Vec &w_private, Index leds)
        {
            BeamformerSet b = BeamformerSet::from_stacked(w_private, leds);
            b.beams.insert(b.beams.begin(), Vec::Zero(leds));
            return b;
        }
    }

    inline DcProgram sdma_program(const ChannelMatrix &ch, std::span<const EntropyParams> entropy, const LiftedOperators &L)
    {
        const Index K = L.users;
        DcProgram prog;
        prog.dimension = K * L.leds;
        prog.num_scalars = K;
        prog.objective = Vec::Ones(K);
        Vec tau(K), eps(K);
        for (Index j = 0; j < K; ++j)
        {
            tau(j) = entropy[std::size_t(j + 1)].tau;
            eps(j) = two_pi * entropy[std::size_t(j + 1)].variance;
        }
        for (Index k = 0; k < K; ++k)
        {
            const double u = L.noise_terms[std::size_t(k)];
            Vec interf = eps;
            interf(k) = 0.0;
            Vec rhs = Vec::Zero(K);
            rhs(k) = 1.0;
            prog.dc.push_back({{u, detail::private_gain(ch, k, tau)}, {u, detail::private_gain(ch, k, interf)}, rhs,
                               "sdma_" + std::to_string(k)});
        }
        const auto streams = detail::private_streams(K);
        prog.linear = restrict_limits(power_limits(L), L.leds, streams).constraints();
        return prog;
    }

    // Users sorted by channel norm, strongest first (ties keep index order).
    inline std::vector<Index> noma_strength_order(const ChannelMatrix &ch)
    {
        std::vector<Index> order(std::size_t(ch.num_users()));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return ch.gains.row(a).norm() > ch.gains.row(b).norm(); });
        return order;
    }

    inline DcProgram noma_program(const ChannelMatrix &ch, std::span<const EntropyParams> entropy, const LiftedOperators &L)
    {
        const Index K = L.users;
        const auto order = noma_strength_order(ch);
        std::vector<Index> rank(static_cast<std::size_t>(K)); // 0 = strongest
        for (Index r = 0; r < K; ++r)
            rank[std::size_t(order[std::size_t(r)])] = r;

        DcProgram prog;
        prog.dimension = K * L.leds;
        prog.num_scalars = K;
        prog.objective = Vec::Ones(K);
        for (Index k = 0; k < K; ++k)
        {
            // streams still present when stream k is decoded: k and every stronger user
            Vec tau = Vec::Zero(K), eps = Vec::Zero(K);
            for (Index l = 0; l < K; ++l)
                if (rank[std::size_t(l)] <= rank[std::size_t(k)])
                {
                    tau(l) = entropy[std::size_t(l + 1)].tau;
                    if (l != k)
                        eps(l) = two_pi * entropy[std::size_t(l + 1)].variance;
                }
            Vec rhs = Vec::Zero(K);
            rhs(k) = 1.0;
            for (Index j = 0; j < K; ++j)
            {
                if (rank[std::size_t(j)] > rank[std::size_t(k)])
                    continue; // weaker users never decode stream k
                const double u = L.noise_terms[std::size_t(j)];
                prog.dc.push_back({{u, detail::private_gain(ch, j, tau)}, {u, detail::private_gain(ch, j, eps)}, rhs,
                                   "noma_" + std::to_string(k) + "_at_" + std::to_string(j)});
            }
        }
        const auto streams = detail::private_streams(K);
        prog.linear = restrict_limits(power_limits(L), L.leds, streams).constraints();
        return prog;
    }

    // Per-user NOMA rates of private beams (common beam ignored).
    inline std::vector<double> noma_rates(const ChannelMatrix &ch, const BeamformerSet &b, std::span<const EntropyParams> entropy,
                                          std::span<const double> noise)
    {
        const Index K = ch.num_users();
        const auto order = noma_strength_order(ch);
        std::vector<Index> rank(static_cast<std::size_t>(K));
        for (Index r = 0; r < K; ++r)
            rank[std::size_t(order[std::size_t(r)])] = r;
        std::vector<double> rates(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k)
        {
            std::vector<Index> interferers;
            for (Index l = 0; l < K; ++l)
                if (l != k && rank[std::size_t(l)] < rank[std::size_t(k)])
                    interferers.push_back(l + 1);
            double r = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < K; ++j)
                if (rank[std::size_t(j)] <= rank[std::size_t(k)])
                    r = std::min(r, stream_rate_bound(ch.row(j), b, entropy, noise[std::size_t(j)], k + 1, interferers));
            rates[std::size_t(k)] = std::max(0.0, r);
        }
        return rates;
    }

    namespace detail
    {
        template <class RatesOf>
        BaselineResult run_baseline(Scheme scheme, const DcProgram &prog, const LiftedOperators &L, const ChannelMatrix &ch,
                                    RatesOf &&rates_of, const ScaOptions &opt)
        {
            const auto streams = private_streams(L.users);
            const PowerLimits limits = restrict_limits(power_limits(L), L.leds, streams);
            const Vec w0 = initial_beams(ch, limits, streams);
            auto sum_of = [&](const Vec &w, const SubproblemSolution &) {
                const auto r = rates_of(with_zero_common(w, L.leds));
                return std::accumulate(r.begin(), r.end(), 0.0);
            };
            ScaPipeline pipe{&prog, limits, [&](const Mat &W) { return per_scalar_value(prog, W); }, sum_of};
            PipelineRun pr = run_pipeline(pipe, w0 * w0.transpose(), opt);

            BaselineResult out;
            out.scheme = scheme;
            auto &res = out.result;
            res.extraction = pr.extraction;
            res.beams = with_zero_common(res.extraction.w_hat, L.leds);
            res.user_rates = rates_of(res.beams);
            res.sum_rate = std::accumulate(res.user_rates.begin(), res.user_rates.end(), 0.0);
            res.sdr_objective = pr.relaxed;
            res.subproblem_objective = pr.run.solution.objective;
            res.restarts = pr.restarts;
            out.decodability_slack = std::numeric_limits<double>::infinity();
            for (const auto &c : prog.dc)
                out.decodability_slack = std::min(out.decodability_slack, c.lhs(pr.run.solution.W) - c.rhs.dot(pr.run.solution.y));
            res.state = std::move(pr.run.state);
            res.solution = std::move(pr.run.solution);
            return out;
        }
    }

    inline BaselineResult solve_sdma(const ScenarioConfig &cfg, const ChannelMatrix &ch, std::span<const EntropyParams> entropy,
                                     const ScaOptions &opt = {})
    {
        const LiftedOperators L = build_lifted(ch, entropy, cfg);
        const DcProgram prog = sdma_program(ch, entropy, L);
        const std::vector<double> zero(std::size_t(L.users), 0.0);
        auto rates_of = [&](const BeamformerSet &b) { return rsma_rates(ch, b, zero, entropy, cfg.noise_variance).user_rates; };
        BaselineResult out = detail::run_baseline(Scheme::sdma, prog, L, ch, rates_of, opt);
        out.result.rates = rsma_rates(ch, out.result.beams, zero, entropy, cfg.noise_variance);
        return out;
    }

    inline BaselineResult solve_noma(const ScenarioConfig &cfg, const ChannelMatrix &ch, std::span<const EntropyParams> entropy,
                                     const ScaOptions &opt = {})
    {
        const LiftedOperators L = build_lifted(ch, entropy, cfg);
        const DcProgram prog = noma_program(ch, entropy, L);
        auto rates_of = [&](const BeamformerSet &b) { return noma_rates(ch, b, entropy, cfg.noise_variance); };
        BaselineResult out = detail::run_baseline(Scheme::noma, prog, L, ch, rates_of, opt);
        out.strength_order = noma_strength_order(ch);
        const std::vector<double> zero(std::size_t(L.users), 0.0);
        out.result.rates = rsma_rates(ch, out.result.beams, zero, entropy, cfg.noise_variance);
        return out;
    }
}
