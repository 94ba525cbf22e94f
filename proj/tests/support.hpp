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

// Shared fixtures and independent reference computations for the test programs. Nothing here calls
// into the library code it is used to check.

#include "rsvlc/baselines.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace rsvlc::test
{
    inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

    // ---------------------------------------------------------------- random instances

    struct Instance
    {
        Index N = 0, K = 0;
        Mat G;                        // K x N channel
        std::vector<Vec> w;           // K + 1 beams
        std::vector<double> tau, eps, amp, noise;
    };

    inline Instance random_instance(std::mt19937_64 &rng, Index maxN = 4, Index maxK = 3)
    {
        std::uniform_int_distribution<Index> dn(1, maxN), dk(1, maxK);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::normal_distribution<double> nrm(0.0, 1.0);
        Instance in;
        in.N = dn(rng);
        in.K = dk(rng);
        in.G = Mat(in.K, in.N);
        for (Index k = 0; k < in.K; ++k)
            for (Index n = 0; n < in.N; ++n)
                in.G(k, n) = u01(rng) * 1e-5;
        for (Index i = 0; i <= in.K; ++i)
        {
            Vec w(in.N);
            for (Index n = 0; n < in.N; ++n)
                w(n) = nrm(rng) * 1e4;
            in.w.push_back(w);
            in.amp.push_back(0.5 + u01(rng));
            in.eps.push_back(in.amp.back() * in.amp.back() * (0.05 + 0.9 * u01(rng)));
            in.tau.push_back(2.0 * std::numbers::pi * std::exp(1.0) * in.eps.back() * (0.3 + 0.7 * u01(rng)));
        }
        for (Index k = 0; k < in.K; ++k)
            in.noise.push_back(1e-3 * (0.1 + u01(rng)));
        return in;
    }

    inline std::vector<EntropyParams> entropy_of(const Instance &in)
    {
        std::vector<EntropyParams> e;
        for (std::size_t i = 0; i < in.tau.size(); ++i)
        {
            // alpha chosen so that exp(1 + 2 alpha) = tau with gamma = 0; only tau enters the rates
            const double alpha = 0.5 * (std::log(in.tau[i]) - 1.0);
            e.push_back({alpha, 0.0, in.tau[i], in.amp[i], in.eps[i]});
        }
        return e;
    }

    inline ScenarioConfig config_of(const Instance &in)
    {
        ScenarioConfig cfg;
        cfg.led_positions.assign(std::size_t(in.N), Eigen::Vector3d(1, 1, 5));
        cfg.user_positions.assign(std::size_t(in.K), Eigen::Vector3d(1, 1, 1));
        cfg.noise_variance = in.noise;
        cfg.signal_amplitude = in.amp;
        cfg.signal_variance = in.eps;
        cfg.electrical_budget = 1.0;
        return cfg;
    }

    inline Vec stacked(const Instance &in)
    {
        Vec s(in.N * (in.K + 1));
        for (Index i = 0; i <= in.K; ++i)
            s.segment(i * in.N, in.N) = in.w[std::size_t(i)];
        return s;
    }

    // ---------------------------------------------------------------- direct rate sums

    // sum_i weight_i (g_k . w_i)^2 written out as a double loop
    inline double direct_sum(const Instance &in, Index k, const std::vector<double> &weight)
    {
        double s = 0.0;
        for (Index i = 0; i <= in.K; ++i)
        {
            double a = 0.0;
            for (Index n = 0; n < in.N; ++n)
                a += in.G(k, n) * in.w[std::size_t(i)](n);
            s += weight[std::size_t(i)] * a * a;
        }
        return s;
    }

    inline double direct_common(const Instance &in, Index k)
    {
        const double u = 2.0 * std::numbers::pi * in.noise[std::size_t(k)];
        std::vector<double> num = in.tau, den(in.tau.size());
        for (Index j = 1; j <= in.K; ++j)
            den[std::size_t(j)] = 2.0 * std::numbers::pi * in.eps[std::size_t(j)];
        return 0.5 * std::log2((u + direct_sum(in, k, num)) / (u + direct_sum(in, k, den)));
    }

    inline double direct_private(const Instance &in, Index k)
    {
        const double u = 2.0 * std::numbers::pi * in.noise[std::size_t(k)];
        std::vector<double> num = in.tau, den(in.tau.size());
        num[0] = 0.0;
        for (Index j = 1; j <= in.K; ++j)
            den[std::size_t(j)] = j == k + 1 ? 0.0 : 2.0 * std::numbers::pi * in.eps[std::size_t(j)];
        return 0.5 * std::log2((u + direct_sum(in, k, num)) / (u + direct_sum(in, k, den)));
    }

    // ---------------------------------------------------------------- entropy oracle

    struct DensityMoments
    {
        double mass, second, entropy; // nats
    };

    // Adaptive Gauss-Kronrod integration of p(s) = exp(-(1/2 + alpha) - gamma s^2) on [-A, A].
    inline DensityMoments density_moments(double alpha, double gamma, double A)
    {
        using boost::math::quadrature::gauss_kronrod;
        auto p = [&](double s) { return std::exp(-(0.5 + alpha) - gamma * s * s); };
        const double mass = gauss_kronrod<double, 61>::integrate(p, -A, A, 15, 1e-14);
        const double second = gauss_kronrod<double, 61>::integrate([&](double s) { return s * s * p(s); }, -A, A, 15, 1e-14);
        const double ent = gauss_kronrod<double, 61>::integrate(
            [&](double s) {
                const double v = p(s);
                return v > 0.0 ? -v * std::log(v) : 0.0;
            },
            -A, A, 15, 1e-14);
        return {mass, second, ent};
    }

    // ---------------------------------------------------------------- brute force K = 1 designs

    // Largest t >= 0 with t w feasible for sum_i eps_i ||w_i||^2 <= P and |sum_i A_i w_{i,n}| <= m.
    inline double feasible_scale(const std::vector<Vec> &w, const std::vector<double> &eps, const std::vector<double> &amp,
                                 double P, double margin)
    {
        double power = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i)
            power += eps[i] * w[i].squaredNorm();
        double t = power > 0.0 ? std::sqrt(P / power) : std::numeric_limits<double>::infinity();
        for (Index n = 0; n < w[0].size(); ++n)
        {
            double a = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                a += amp[i] * w[i](n);
            if (a != 0.0)
                t = std::min(t, margin / std::abs(a));
        }
        return t;
    }

    // K = 1 RSMA sum rate max(0, R_c) + max(0, R_p) of beams (w0, w1) on channel g.
    inline double k1_sum_rate(const Vec &g, const Vec &w0, const Vec &w1, const std::vector<double> &tau,
                              const std::vector<double> &eps, double noise)
    {
        const double u = 2.0 * std::numbers::pi * noise;
        const double a0 = g.dot(w0), a1 = g.dot(w1);
        const double rc = 0.5 * std::log2((u + tau[0] * a0 * a0 + tau[1] * a1 * a1) / (u + 2.0 * std::numbers::pi * eps[1] * a1 * a1));
        const double rp = 0.5 * std::log2(1.0 + tau[1] * a1 * a1 / u);
        return std::max(0.0, rc) + std::max(0.0, rp);
    }

    // Exhaustive search over (w0, w1) in R^2 x R^2, `per_axis` points per coordinate on the feasible box;
    // every grid point is also pushed radially onto its binding limit.
    inline double k1_grid_search(const Vec &g, const std::vector<double> &tau, const std::vector<double> &eps,
                                 const std::vector<double> &amp, double noise, double P, double margin, int per_axis)
    {
        const double lim0 = std::min(std::sqrt(P / eps[0]), margin / amp[0]);
        const double lim1 = std::min(std::sqrt(P / eps[1]), 2.0 * margin / amp[1]);
        auto axis = [&](double lim, int i) { return -lim + 2.0 * lim * double(i) / double(per_axis - 1); };
        double best = 0.0;
        Vec w0(2), w1(2);
        for (int i0 = 0; i0 < per_axis; ++i0)
            for (int i1 = 0; i1 < per_axis; ++i1)
                for (int j0 = 0; j0 < per_axis; ++j0)
                    for (int j1 = 0; j1 < per_axis; ++j1)
                    {
                        w0 << axis(lim0, i0), axis(lim0, i1);
                        w1 << axis(lim1, j0), axis(lim1, j1);
                        const std::vector<Vec> w{w0, w1};
                        const double t = feasible_scale(w, eps, amp, P, margin);
                        if (!(t > 0.0) || !std::isfinite(t))
                            continue;
                        if (t >= 1.0)
                            best = std::max(best, k1_sum_rate(g, w0, w1, tau, eps, noise));
                        best = std::max(best, k1_sum_rate(g, t * w0, t * w1, tau, eps, noise));
                    }
        return best;
    }
}
