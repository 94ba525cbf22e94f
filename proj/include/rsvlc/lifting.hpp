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

// Lifted operators on the stacked beamformer w_hat = [w_0; ...; w_K] (length (K+1)N) and on its
// semidefinite relaxation W_hat ~ w_hat w_hat^T.

#include "rsvlc/entropy.hpp"
#include "rsvlc/rates.hpp"
#include "rsvlc/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <span>
#include <vector>

namespace rsvlc
{
    // diag{weights} (x) g g^T, stored as its factors. Only the K + 1 diagonal N x N blocks are nonzero.
    struct KroneckerGain
    {
        Vec weights; // one per stream
        Vec g;       // channel, length N

        Index size() const { return weights.size() * g.size(); }

        // w_hat^T G w_hat = sum_i weights_i (g^T w_i)^2
        double quad_form(const Vec &w_hat) const
        {
            const Index N = g.size();
            double s = 0.0;
            for (Index i = 0; i < weights.size(); ++i)
            {
                const double a = g.dot(w_hat.segment(i * N, N));
                s += weights(i) * a * a;
            }
            return s;
        }

        // Tr(W G) = sum_i weights_i g^T W_ii g
        double trace_product(const Mat &W) const
        {
            const Index N = g.size();
            double s = 0.0;
            for (Index i = 0; i < weights.size(); ++i)
                if (weights(i) != 0.0)
                    s += weights(i) * g.dot(W.block(i * N, i * N, N, N) * g);
            return s;
        }

        Mat dense() const
        {
            const Index N = g.size();
            Mat G = Mat::Zero(size(), size());
            const Mat ggT = g * g.transpose();
            for (Index i = 0; i < weights.size(); ++i)
                G.block(i * N, i * N, N, N) = weights(i) * ggT;
            return G;
        }

        // Keeps only the listed streams, in the listed order.
        KroneckerGain restrict(std::span<const Index> streams) const
        {
            KroneckerGain r{Vec(Index(streams.size())), g};
            for (std::size_t j = 0; j < streams.size(); ++j)
                r.weights(Index(j)) = weights(streams[j]);
            return r;
        }
    };

    struct LiftedOperators
    {
        Index leds = 0, users = 0;
        Vec d_hat;                          // sqrt(eps_i) repeated over each block
        std::vector<Vec> a;                 // a_n: A_i at position iN + n
        std::vector<KroneckerGain> G_c;     // diag{tau_0..tau_K} (x) g_k g_k^T
        std::vector<KroneckerGain> G_c_bar; // 2 pi diag{0, eps_1..eps_K} (x) g_k g_k^T
        std::vector<KroneckerGain> G_c_hat; // diag{0, tau_1..tau_K} (x) g_k g_k^T
        std::vector<KroneckerGain> G_p_hat; // 2 pi diag{0, eps_j (j != k), 0 at block k} (x) g_k g_k^T
        std::vector<double> noise_terms;    // 2 pi sigma_k^2
        double power_budget = 0.0;          // P_t
        double peak_margin = 0.0;           // min{b, I_H - b}

        Index dimension() const { return (users + 1) * leds; }

        // Diagonal of D = diag(d_hat)^2; Tr(W D) is the electrical signal power.
        Vec power_weights() const { return d_hat.cwiseProduct(d_hat); }
    };

    inline LiftedOperators build_lifted(const ChannelMatrix &ch, std::span<const EntropyParams> entropy, const ScenarioConfig &cfg)
    {
        const Index K = ch.num_users(), N = ch.num_leds();
        if (Index(entropy.size()) != K + 1)
            throw DimensionError("build_lifted: need K + 1 entropy entries");
        if (Index(cfg.num_users()) != K || Index(cfg.num_leds()) != N || Index(cfg.signal_amplitude.size()) != K + 1 ||
            Index(cfg.noise_variance.size()) != K)
            throw DimensionError("build_lifted: scenario and channel dimensions disagree");

        LiftedOperators L;
        L.leds = N;
        L.users = K;
        L.power_budget = cfg.electrical_budget;
        L.peak_margin = cfg.peak_margin();

        const Index S = K + 1;
        L.d_hat.resize(S * N);
        for (Index i = 0; i < S; ++i)
            L.d_hat.segment(i * N, N).setConstant(std::sqrt(entropy[std::size_t(i)].variance));

        for (Index n = 0; n < N; ++n)
        {
            Vec a = Vec::Zero(S * N);
            for (Index i = 0; i < S; ++i)
                a(i * N + n) = cfg.signal_amplitude[std::size_t(i)];
            L.a.push_back(std::move(a));
        }

        Vec tau(S), eps2pi(S);
        for (Index i = 0; i < S; ++i)
        {
            tau(i) = entropy[std::size_t(i)].tau;
            eps2pi(i) = two_pi * entropy[std::size_t(i)].variance;
        }
        for (Index k = 0; k < K; ++k)
        {
            const Vec g = ch.row(k);
            Vec tau_priv = tau, eps_bar = eps2pi;
            tau_priv(0) = 0.0;
            eps_bar(0) = 0.0;
            Vec eps_p = eps_bar;
            eps_p(k + 1) = 0.0;

            L.G_c.push_back({tau, g});
            L.G_c_bar.push_back({eps_bar, g});
            L.G_c_hat.push_back({tau_priv, g});
            L.G_p_hat.push_back({eps_p, g});
            L.noise_terms.push_back(two_pi * cfg.noise_variance[std::size_t(k)]);
        }
        return L;
    }

    struct UserForms
    {
        double G_c = 0, G_c_bar = 0, G_c_hat = 0, G_p_hat = 0;
    };

    struct QuadraticForms
    {
        std::vector<UserForms> users;
        double power = 0.0;       // Tr(W D)
        std::vector<double> peak; // Tr(W a_n a_n^T) per LED
    };

    inline constexpr double psd_tolerance = 1e-8; // min eigenvalue >= -tol * trace

    // Throws unless W is symmetric and PSD within tolerance.
    inline void check_psd(const Mat &W)
    {
        if (W.rows() != W.cols())
            throw DimensionError("matrix is not square");
        const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
        if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw NumericalError("matrix is not symmetric");
        if (W.size() == 0)
            return;
        Eigen::SelfAdjointEigenSolver<Mat> es(W, Eigen::EigenvaluesOnly);
        const double tr = W.trace();
        if (es.eigenvalues().minCoeff() < -psd_tolerance * std::max(tr, 0.0) - 1e-300)
            throw NumericalError("matrix is not positive semidefinite");
    }

    // Matrix mode: Tr(W G) for every lifted operator.
    inline QuadraticForms quadratic_forms(const LiftedOperators &L, const Mat &W)
    {
        if (W.rows() != L.dimension())
            throw DimensionError("quadratic_forms: matrix dimension mismatch");
        check_psd(W);
        QuadraticForms q;
        for (Index k = 0; k < L.users; ++k)
            q.users.push_back({L.G_c[std::size_t(k)].trace_product(W), L.G_c_bar[std::size_t(k)].trace_product(W),
                               L.G_c_hat[std::size_t(k)].trace_product(W), L.G_p_hat[std::size_t(k)].trace_product(W)});
        q.power = W.diagonal().dot(L.power_weights());
        for (const auto &a : L.a)
            q.peak.push_back(a.dot(W * a));
        return q;
    }

    // Vector mode: w_hat^T G w_hat; equals matrix mode at W = w_hat w_hat^T.
    inline QuadraticForms quadratic_forms(const LiftedOperators &L, const Vec &w_hat)
    {
        if (w_hat.size() != L.dimension())
            throw DimensionError("quadratic_forms: vector dimension mismatch");
        QuadraticForms q;
        for (Index k = 0; k < L.users; ++k)
            q.users.push_back({L.G_c[std::size_t(k)].quad_form(w_hat), L.G_c_bar[std::size_t(k)].quad_form(w_hat),
                               L.G_c_hat[std::size_t(k)].quad_form(w_hat), L.G_p_hat[std::size_t(k)].quad_form(w_hat)});
        q.power = w_hat.cwiseProduct(w_hat).dot(L.power_weights());
        for (const auto &a : L.a)
        {
            const double v = a.dot(w_hat);
            q.peak.push_back(v * v);
        }
        return q;
    }

    // Rate bounds in lifted form: common 1/2 log2((u + Tr W G_c)/(u + Tr W G_c_bar)),
    // private 1/2 log2((u + Tr W G_c_hat)/(u + Tr W G_p_hat)).
    inline double lifted_common_rate(const LiftedOperators &L, const UserForms &f, Index k)
    {
        const double u = L.noise_terms[std::size_t(k)];
        return half_log2((u + f.G_c) / (u + f.G_c_bar));
    }

    inline double lifted_private_rate(const LiftedOperators &L, const UserForms &f, Index k)
    {
        const double u = L.noise_terms[std::size_t(k)];
        return half_log2((u + f.G_c_hat) / (u + f.G_p_hat));
    }
}
