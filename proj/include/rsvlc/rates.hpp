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

#include "rsvlc/entropy.hpp"
#include "rsvlc/scenario.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <sstream>
#include <vector>

namespace rsvlc
{
    // Beamformers w_0 (common) .. w_K (private of user k - 1), each of length N.
    struct BeamformerSet
    {
        std::vector<Vec> beams;

        static BeamformerSet zeros(Index leds, Index users)
        {
            return {std::vector<Vec>(std::size_t(users + 1), Vec::Zero(leds))};
        }

        // Splits w_hat = [w_0; ...; w_K].
        static BeamformerSet from_stacked(const Vec &w_hat, Index leds)
        {
            if (leds <= 0 || w_hat.size() % leds != 0)
                throw DimensionError("stacked beamformer length is not a multiple of the LED count");
            BeamformerSet b;
            for (Index i = 0; i < w_hat.size() / leds; ++i)
                b.beams.push_back(w_hat.segment(i * leds, leds));
            return b;
        }

        Vec stacked() const
        {
            Vec out(num_streams() * num_leds());
            for (std::size_t i = 0; i < beams.size(); ++i)
                out.segment(Index(i) * num_leds(), num_leds()) = beams[i];
            return out;
        }

        Index num_streams() const { return Index(beams.size()); }
        Index num_users() const { return num_streams() - 1; }
        Index num_leds() const { return beams.empty() ? 0 : beams.front().size(); }
    };

    namespace detail
    {
        inline void check_rate_inputs(const Vec &g, const BeamformerSet &b, std::span<const EntropyParams> entropy)
        {
            if (b.num_streams() < 2)
                throw DimensionError("beamformer set needs a common and at least one private stream");
            if (Index(entropy.size()) != b.num_streams())
                throw DimensionError("entropy list must have one entry per stream");
            for (const auto &w : b.beams)
                if (w.size() != g.size())
                    throw DimensionError("beamformer length differs from channel length");
        }
    }

    // 1/2 log2((2 pi sigma^2 + sum_{i in decoded+interferers} tau_i (g^T w_i)^2) /
    //           (2 pi sigma^2 + 2 pi sum_{j in interferers} eps_j (g^T w_j)^2))
    //
    // Lower bound on the rate of stream `desired` at a receiver with channel g when the streams in
    // `interferers` remain undecoded. Common, private and NOMA rates are all of this form.
    inline double stream_rate_bound(const Vec &g, const BeamformerSet &b, std::span<const EntropyParams> entropy, double noise,
                                    Index desired, std::span<const Index> interferers)
    {
        detail::check_rate_inputs(g, b, entropy);
        if (desired < 0 || desired >= b.num_streams())
            throw DimensionError("desired stream index out of range");

        const double base = two_pi * noise;
        auto energy = [&](Index i) {
            const double a = g.dot(b.beams[std::size_t(i)]);
            return a * a;
        };
        double num = base + entropy[std::size_t(desired)].tau * energy(desired);
        double den = base;
        for (Index j : interferers)
        {
            if (j < 0 || j >= b.num_streams() || j == desired)
                throw DimensionError("interferer index out of range");
            const double e = energy(j);
            num += entropy[std::size_t(j)].tau * e;
            den += two_pi * entropy[std::size_t(j)].variance * e;
        }
        return half_log2(num / den);
    }

    // Lower bound on the rate of decoding s_0 at a receiver with channel g; may be negative.
    inline double common_rate_bound(const Vec &g, const BeamformerSet &b, std::span<const EntropyParams> entropy, double noise)
    {
        detail::check_rate_inputs(g, b, entropy);
        std::vector<Index> privates(std::size_t(b.num_users()));
        std::iota(privates.begin(), privates.end(), Index{1});
        return stream_rate_bound(g, b, entropy, noise, 0, privates);
    }

    // Lower bound on the rate of user `user`'s private stream after the common stream is cancelled.
    inline double private_rate_bound(const Vec &g, const BeamformerSet &b, std::span<const EntropyParams> entropy, double noise,
                                     Index user)
    {
        detail::check_rate_inputs(g, b, entropy);
        if (user < 0 || user >= b.num_users())
            throw DimensionError("user index out of range");
        std::vector<Index> others;
        for (Index j = 1; j <= b.num_users(); ++j)
            if (j != user + 1)
                others.push_back(j);
        return stream_rate_bound(g, b, entropy, noise, user + 1, others);
    }

    inline constexpr double share_tolerance = 1e-6;

    struct RateAllocation
    {
        std::vector<double> common_shares;     // c_k
        double common_rate = 0.0;              // R_c = max(0, min_k R_{k,c})
        std::vector<double> common_bounds;     // raw R_{k,c}
        std::vector<double> private_rates;     // max(0, R_{k,p})
        std::vector<double> private_bounds;    // raw R_{k,p}
        std::vector<double> user_rates;        // c_k + R_{k,p}
        bool clamped = false;                  // some raw bound was negative

        double sum_rate() const { return std::accumulate(user_rates.begin(), user_rates.end(), 0.0); }
    };

    // Per-user RSMA rates for given common-rate shares.
    inline RateAllocation rsma_rates(const ChannelMatrix &ch, const BeamformerSet &b, std::span<const double> shares,
                                     std::span<const EntropyParams> entropy, std::span<const double> noise)
    {
        const Index K = ch.num_users();
        if (b.num_users() != K || Index(shares.size()) != K || Index(noise.size()) != K)
            throw DimensionError("rsma_rates: user counts disagree");

        RateAllocation r;
        r.common_shares.assign(shares.begin(), shares.end());
        double rc = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < K; ++k)
        {
            const Vec g = ch.row(k);
            const double c = common_rate_bound(g, b, entropy, noise[std::size_t(k)]);
            const double p = private_rate_bound(g, b, entropy, noise[std::size_t(k)], k);
            r.common_bounds.push_back(c);
            r.private_bounds.push_back(p);
            r.private_rates.push_back(std::max(0.0, p));
            rc = std::min(rc, c);
            r.clamped = r.clamped || c < 0.0 || p < 0.0;
        }
        r.common_rate = std::max(0.0, rc);

        double total = 0.0;
        for (double c : shares)
        {
            if (c < -share_tolerance)
                throw InfeasibleSharesError("common-rate share is negative", c);
            total += c;
        }
        const double slack = r.common_rate - total;
        if (slack < -share_tolerance)
        {
            std::ostringstream os;
            os << "common-rate shares exceed R_c by " << -slack;
            throw InfeasibleSharesError(os.str(), slack);
        }
        for (Index k = 0; k < K; ++k)
            r.user_rates.push_back(shares[std::size_t(k)] + r.private_rates[std::size_t(k)]);
        return r;
    }

    // Rescales nonnegative shares so that they sum to R_c (equal split when all are zero).
    inline std::vector<double> project_shares(std::span<const double> shares, double common_rate)
    {
        std::vector<double> c(shares.size());
        double total = 0.0;
        for (std::size_t k = 0; k < shares.size(); ++k)
        {
            c[k] = std::max(0.0, shares[k]);
            total += c[k];
        }
        for (auto &v : c)
            v = total > 0.0 ? v * common_rate / total : common_rate / double(c.size());
        return c;
    }
}
