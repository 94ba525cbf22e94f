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

// Maximum-entropy density of a signal with |s| <= A and E{s^2} = eps:
//
//     p(s) = exp(-(1/2 + alpha) - gamma * s^2)   for |s| <= A,   0 otherwise.
//
// Its differential entropy (nats) is h = 1/2 + alpha + gamma * eps, so the entropy power factor
// tau = exp(2h) = exp(1 + 2(alpha + gamma * eps)) is the term that multiplies |g_k^T w_i|^2 in the
// rate bounds. Uniform signals (eps = A^2 / 3) give gamma = 0 and tau = 4 A^2.

#include "rsvlc/common.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

namespace rsvlc
{
    struct EntropyParams
    {
        double alpha = 0.0;
        double gamma = 0.0;
        double tau = 0.0;
        double amplitude = 0.0;
        double variance = 0.0;
    };

    inline double entropy_power(const EntropyParams &p) { return std::exp(1.0 + 2.0 * (p.alpha + p.gamma * p.variance)); }

    struct EntropySolveOptions
    {
        int max_iter = 200;
        double moment_tol = 1e-10; // absolute, on both moment equations
    };

    namespace detail
    {
        // 64-point Gauss-Legendre rule on [-1, 1], computed once.
        struct GaussLegendre64
        {
            static constexpr int n = 64;
            std::array<double, n> x{}, w{};

            GaussLegendre64()
            {
                for (int i = 0; i < n / 2; ++i)
                {
                    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
                    double dp = 0.0;
                    for (int it = 0; it < 100; ++it)
                    {
                        double p0 = 1.0, p1 = z;
                        for (int k = 2; k <= n; ++k)
                        {
                            const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                            p0 = p1;
                            p1 = pk;
                        }
                        dp = n * (z * p1 - p0) / (z * z - 1.0);
                        const double dz = p1 / dp;
                        z -= dz;
                        if (std::abs(dz) < 1e-16)
                            break;
                    }
                    x[i] = -z;
                    x[n - 1 - i] = z;
                    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
                }
            }
        };

        inline const GaussLegendre64 &gauss_legendre64()
        {
            static const GaussLegendre64 rule;
            return rule;
        }

        // Moments of exp(-kappa x^2 - shift) on [0, 1], shift = max(0, -kappa) keeps the integrand <= 1.
        struct UnitMoments
        {
            double m0, m2, m4, shift;
        };

        // Composite Gauss-Legendre with panels graded geometrically away from the density peak
        // (x = 0 for kappa > 0, x = 1 for kappa < 0).
        inline UnitMoments unit_moments(double kappa)
        {
            const auto &gl = gauss_legendre64();
            const double shift = std::max(0.0, -kappa);

            double scale = 1.0;
            if (kappa > 1.0)
                scale = 1.0 / std::sqrt(kappa);
            else if (kappa < -1.0)
                scale = 1.0 / (2.0 * -kappa);

            std::vector<double> brk{0.0};
            for (double d = scale; d < 1.0; d *= 2.0)
                brk.push_back(d);
            brk.push_back(1.0);

            UnitMoments m{0.0, 0.0, 0.0, shift};
            for (std::size_t p = 0; p + 1 < brk.size(); ++p)
            {
                const double lo = brk[p], hi = brk[p + 1];
                const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
                for (int i = 0; i < gl.n; ++i)
                {
                    // distance from the peak -> position in [0, 1]
                    const double d = mid + half * gl.x[std::size_t(i)];
                    const double x = kappa < 0.0 ? 1.0 - d : d;
                    const double f = std::exp(-kappa * x * x - shift) * gl.w[std::size_t(i)] * half;
                    const double x2 = x * x;
                    m.m0 += f;
                    m.m2 += f * x2;
                    m.m4 += f * x2 * x2;
                }
            }
            return m;
        }
    }

    // Solves for (alpha, gamma) given amplitude A and variance eps in (0, A^2).
    //
    // Works in x = s / A with kappa = gamma A^2: normalization fixes alpha in closed form, leaving the
    // scalar equation E_kappa[x^2] = eps / A^2, which is strictly decreasing in kappa. Newton steps use
    // dE[x^2]/dkappa = -Var(x^2) and fall back to bisection whenever they leave the bracket.
    inline EntropyParams solve_entropy_params(double amplitude, double variance, const EntropySolveOptions &opt = {})
    {
        if (!(amplitude > 0.0))
            throw InfeasibleMomentError("amplitude must be positive");
        const double A2 = amplitude * amplitude;
        if (!(variance > 0.0 && variance < A2))
        {
            std::ostringstream os;
            os << "variance " << variance << " outside (0, A^2) with A = " << amplitude;
            throw InfeasibleMomentError(os.str());
        }

        const double target = variance / A2;
        auto moment = [](double kappa) {
            const auto m = detail::unit_moments(kappa);
            const double r = m.m2 / m.m0;
            return std::pair{r, m.m4 / m.m0 - r * r};
        };

        // Bracket: r(lo) > target > r(hi).
        double lo = -1.0, hi = 1.0;
        while (moment(lo).first <= target)
            lo *= 2.0;
        while (moment(hi).first >= target)
            hi *= 2.0;

        double kappa;
        if (std::abs(target - 1.0 / 3.0) < 1e-15)
            kappa = 0.0;
        else if (target < 1.0 / 3.0)
            kappa = std::clamp(0.5 / target - 1.5, 0.0, hi);
        else
            kappa = std::clamp(-1.0 / (1.0 - target) + 3.0, lo, 0.0);

        double resid = std::numeric_limits<double>::infinity();
        int it = 0;
        for (; it < opt.max_iter; ++it)
        {
            const auto [r, var2] = moment(kappa);
            resid = r - target;
            if (resid > 0.0)
                lo = kappa;
            else
                hi = kappa;
            if (std::abs(resid) <= 4.0 * std::numeric_limits<double>::epsilon() * target || hi - lo <= 1e-15 * (1.0 + std::abs(kappa)))
                break;
            double next = kappa + resid / var2;
            if (!(next > lo && next < hi))
                next = 0.5 * (lo + hi);
            kappa = next;
        }

        const auto m = detail::unit_moments(kappa);
        // Z = int_{-A}^{A} exp(-gamma s^2) ds = 2 A m0 exp(shift)
        const double log_z = std::log(2.0 * amplitude * m.m0) + m.shift;

        EntropyParams p;
        p.amplitude = amplitude;
        p.variance = variance;
        p.gamma = kappa / A2;
        p.alpha = log_z - 0.5;
        p.tau = entropy_power(p);

        const double var_resid = std::abs(A2 * m.m2 / m.m0 - variance);
        if (!(var_resid <= opt.moment_tol) || !std::isfinite(p.tau))
        {
            std::ostringstream os;
            os << "entropy parameter solve did not converge: A = " << amplitude << ", eps = " << variance
               << ", kappa = " << kappa << ", variance residual = " << var_resid << " after " << it << " iterations";
            throw NumericalError(os.str());
        }
        return p;
    }

    // One entry per stream 0..K.
    inline std::vector<EntropyParams> solve_entropy_params(std::span<const double> amplitudes, std::span<const double> variances)
    {
        if (amplitudes.size() != variances.size())
            throw DimensionError("amplitude and variance lists differ in length");
        std::vector<EntropyParams> out;
        out.reserve(amplitudes.size());
        for (std::size_t i = 0; i < amplitudes.size(); ++i)
            out.push_back(solve_entropy_params(amplitudes[i], variances[i]));
        return out;
    }
}
