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

// Small convex programs over a PSD matrix W and a scalar vector y:
//
//     maximize    objective^T y
//     subject to  1/2 log2(offset + Tr(W G)) + Tr(W F) + h^T y + r >= 0   (log constraints)
//                 Tr(W F) + h^T y + r >= 0                                 (linear constraints)
//                 W >= 0
//
// Solved by a primal log-barrier path-following method: -log det W for the cone, -log(h_j) for
// every constraint. A phase-I problem with a common slack finds a strictly feasible start.

#include "rsvlc/common.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rsvlc
{
    struct LogConstraint
    {
        double offset = 1.0; // > 0
        Mat gain;            // G, symmetric PSD
        Mat linear_W;        // F, symmetric (may be empty -> zero)
        Vec linear_y;        // h (may be empty -> zero)
        double constant = 0.0;
        std::string label;
    };

    struct LinearConstraint
    {
        Mat linear_W;
        Vec linear_y;
        double constant = 0.0;
        std::string label;
    };

    struct ConvexSubproblem
    {
        Index dimension = 0;   // side of W
        Index num_scalars = 0; // length of y
        Vec objective;         // maximize objective^T y
        std::vector<LogConstraint> log_constraints;
        std::vector<LinearConstraint> linear_constraints;
    };

    struct SubproblemTolerances
    {
        double gap = 1e-9;          // barrier duality gap m / t, absolute (objective units)
        double feasibility = 1e-7;  // reported primal residual bound
        double barrier_growth = 10.0;
        int max_newton = 2000;      // total Newton steps over both phases
        double stall_gap = 1e-6;    // a centering lost to rounding is accepted once m / t is below this
    };

    enum class SolveStatus
    {
        optimal,
        infeasible,
        max_iter
    };

    inline const char *to_string(SolveStatus s)
    {
        switch (s)
        {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iter: return "max-iter";
        }
        return "?";
    }

    struct SubproblemSolution
    {
        Mat W;
        Vec y;
        double objective = 0.0;
        SolveStatus status = SolveStatus::max_iter;
        double primal_residual = 0.0; // max scaled violation, >= 0
        double dual_residual = 0.0;   // barrier gradient norm / t, in the Newton scaling
        double gap = 0.0;             // sum lambda_j h_j + Tr(Z W)
        int newton_steps = 0;
    };

    // Value of constraint `c` at (W, y).
    inline double evaluate(const LogConstraint &c, const Mat &W, const Vec &y)
    {
        double v = half_log2(c.offset + (W.size() ? (W.cwiseProduct(c.gain)).sum() : 0.0)) + c.constant;
        if (c.linear_W.size())
            v += W.cwiseProduct(c.linear_W).sum();
        if (c.linear_y.size())
            v += c.linear_y.dot(y);
        return v;
    }

    inline double evaluate(const LinearConstraint &c, const Mat &W, const Vec &y)
    {
        double v = c.constant;
        if (c.linear_W.size())
            v += W.cwiseProduct(c.linear_W).sum();
        if (c.linear_y.size())
            v += c.linear_y.dot(y);
        return v;
    }

    namespace detail
    {
        inline constexpr double inv_2ln2 = 0.5 / std::numbers::ln2;

        inline Index svec_size(Index n) { return n * (n + 1) / 2; }

        // Lower triangle, column-major, off-diagonals scaled by sqrt(2): <A, B> = svec(A) . svec(B).
        inline Vec svec(const Mat &A)
        {
            const Index n = A.rows();
            Vec v(svec_size(n));
            Index p = 0;
            for (Index j = 0; j < n; ++j)
                for (Index i = j; i < n; ++i)
                    v(p++) = i == j ? A(i, i) : std::numbers::sqrt2 * 0.5 * (A(i, j) + A(j, i));
            return v;
        }

        inline Mat smat(const Eigen::Ref<const Vec> &v, Index n)
        {
            Mat A(n, n);
            Index p = 0;
            for (Index j = 0; j < n; ++j)
                for (Index i = j; i < n; ++i)
                {
                    const double x = i == j ? v(p) : v(p) / std::numbers::sqrt2;
                    A(i, j) = A(j, i) = x;
                    ++p;
                }
            return A;
        }

        // h(x) = coef * ln(1 + q . xW) + f . x + r    (coef = 0 for linear rows)
        struct BarrierRow
        {
            double coef = 0.0;
            Vec q;
            Vec f;
            double r = 0.0;
        };

        // Barrier problem: minimize  t * cost . x  -  sum ln h_j(x)  -  ln det smat(xW)
        class BarrierProblem
        {
          public:
            Index n = 0, nW = 0, nx = 0;
            std::vector<BarrierRow> rows;
            Vec cost;

            // -ln(arg) for every log row makes each row's barrier self-concordant
            Index num_barrier_terms() const
            {
                Index logs = 0;
                for (const auto &row : rows)
                    logs += row.coef != 0.0;
                return Index(rows.size()) + logs + n;
            }

            struct Eval
            {
                double value;
                Vec grad;
                Mat hess;
            };

            // False if x lies outside the barrier domain.
            bool in_domain(const Vec &x) const
            {
                for (const auto &row : rows)
                {
                    if (row.coef != 0.0 && !(1.0 + row.q.dot(x.head(nW)) > 0.0))
                        return false;
                    if (!(value(row, x) > 0.0))
                        return false;
                }
                if (n > 0)
                {
                    Eigen::LLT<Mat> llt(smat(x.head(nW), n));
                    if (llt.info() != Eigen::Success)
                        return false;
                }
                return true;
            }

            double value(const BarrierRow &row, const Vec &x) const
            {
                double v = row.f.dot(x) + row.r;
                if (row.coef != 0.0)
                    v += row.coef * std::log1p(row.q.dot(x.head(nW)));
                return v;
            }

            double objective(const Vec &x, double t) const
            {
                double F = t * cost.dot(x);
                for (const auto &row : rows)
                {
                    F -= std::log(value(row, x));
                    if (row.coef != 0.0)
                        F -= std::log1p(row.q.dot(x.head(nW)));
                }
                if (n > 0)
                {
                    Eigen::LLT<Mat> llt(smat(x.head(nW), n));
                    F -= 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
                }
                return F;
            }

            // F(x + step dx) - F(x) computed from increments, or nullopt outside the domain. Used by the
            // line search, where F itself is too large to resolve the decrease at high t.
            std::optional<double> change(const Vec &x, const Vec &dx, double step, double t) const
            {
                double d = t * step * cost.dot(dx);
                for (const auto &row : rows)
                {
                    double dh = step * row.f.dot(dx);
                    if (row.coef != 0.0)
                    {
                        const double rel = step * row.q.dot(dx.head(nW)) / (1.0 + row.q.dot(x.head(nW)));
                        if (!(rel > -1.0))
                            return std::nullopt;
                        const double dlog = std::log1p(rel);
                        dh += row.coef * dlog;
                        d -= dlog;
                    }
                    const double ratio = dh / value(row, x);
                    if (!(ratio > -1.0))
                        return std::nullopt;
                    d -= std::log1p(ratio);
                }
                if (n > 0)
                {
                    const Mat W = smat(x.head(nW), n);
                    Eigen::LLT<Mat> llt(W);
                    const Mat Linv = llt.matrixL().solve(Mat::Identity(n, n));
                    const Mat M = Linv * smat(dx.head(nW), n) * Linv.transpose();
                    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
                    for (Index i = 0; i < n; ++i)
                    {
                        const double mu = step * es.eigenvalues()(i);
                        if (!(mu > -1.0))
                            return std::nullopt;
                        d -= std::log1p(mu);
                    }
                }
                return d;
            }

            Eval evaluate(const Vec &x, double t, bool with_hessian = true) const
            {
                Eval e{objective(x, t), t * cost, Mat()};
                if (with_hessian)
                    e.hess = Mat::Zero(nx, nx);
                for (const auto &row : rows)
                {
                    const double h = value(row, x);
                    Vec dh = row.f;
                    double arg = 1.0, w = 0.0;
                    if (row.coef != 0.0)
                    {
                        arg = 1.0 + row.q.dot(x.head(nW));
                        dh.head(nW) += row.coef / arg * row.q;
                        w = row.coef / (arg * arg);
                    }
                    e.grad -= dh / h;
                    if (row.coef != 0.0)
                        e.grad.head(nW) -= row.q / arg;
                    if (with_hessian)
                    {
                        e.hess.selfadjointView<Eigen::Lower>().rankUpdate(dh, 1.0 / (h * h));
                        if (w != 0.0)
                            e.hess.topLeftCorner(nW, nW).selfadjointView<Eigen::Lower>().rankUpdate(row.q, w / h + 1.0 / (arg * arg));
                    }
                }
                if (n > 0)
                {
                    const Mat Wm = smat(x.head(nW), n);
                    const Mat V = Wm.llt().solve(Mat::Identity(n, n));
                    e.grad.head(nW) -= svec(V);
                    if (with_hessian)
                    {
                        // column a of the log-det Hessian is svec(V E_a V)
                        Index a = 0;
                        for (Index j = 0; j < n; ++j)
                            for (Index i = j; i < n; ++i, ++a)
                            {
                                Mat M;
                                if (i == j)
                                    M = V.col(i) * V.col(i).transpose();
                                else
                                    M = (V.col(i) * V.col(j).transpose() + V.col(j) * V.col(i).transpose()) / std::numbers::sqrt2;
                                const Vec col = svec(M);
                                for (Index b = a; b < nW; ++b)
                                    e.hess(b, a) += col(b);
                            }
                    }
                }
                if (with_hessian)
                    e.hess = e.hess.selfadjointView<Eigen::Lower>();
                return e;
            }
        };

        // Newton direction and squared decrement at (x, t), solved in the coordinates W' = L Z L^T with
        // L = chol(W'). There the log-det Hessian is the identity, so a nearly singular W' does not
        // ruin the conditioning of the system.
        struct NewtonStep
        {
            Vec dx;
            double dec2 = 0.0;
            double grad_norm = 0.0; // in the scaled coordinates
        };

        inline NewtonStep newton_step(const BarrierProblem &bp, const Vec &x, double t)
        {
            const Index n = bp.n, nW = bp.nW, nx = bp.nx;
            Mat Lc;
            if (n > 0)
            {
                Eigen::LLT<Mat> llt(smat(x.head(nW), n));
                Lc = llt.matrixL();
            }
            auto scaled = [&](const Vec &v) -> Vec {
                Vec out = v;
                if (n > 0)
                    out.head(nW) = svec(Lc.transpose() * smat(v.head(nW), n) * Lc);
                return out;
            };

            Vec grad = scaled(t * bp.cost);
            Mat hess = Mat::Zero(nx, nx);
            for (const auto &row : bp.rows)
            {
                const double h = bp.value(row, x);
                Vec dh = row.f;
                double arg = 1.0;
                if (row.coef != 0.0)
                {
                    arg = 1.0 + row.q.dot(x.head(nW));
                    dh.head(nW) += row.coef / arg * row.q;
                }
                dh = scaled(dh);
                grad -= dh / h;
                hess.selfadjointView<Eigen::Lower>().rankUpdate(dh, 1.0 / (h * h));
                if (row.coef != 0.0)
                {
                    Vec q = Vec::Zero(nx);
                    q.head(nW) = row.q;
                    q = scaled(q);
                    grad -= q / arg;
                    hess.topLeftCorner(nW, nW).selfadjointView<Eigen::Lower>().rankUpdate(q.head(nW), row.coef / (h * arg * arg) + 1.0 / (arg * arg));
                }
            }
            if (n > 0)
            {
                grad.head(nW) -= svec(Mat::Identity(n, n));
                hess.diagonal().head(nW).array() += 1.0;
            }
            hess = hess.selfadjointView<Eigen::Lower>();

            Eigen::LDLT<Mat> ldlt(hess);
            Vec dz = -ldlt.solve(grad);
            if (ldlt.info() != Eigen::Success || !dz.allFinite())
            {
                const double reg = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
                dz = -(hess + reg * Mat::Identity(nx, nx)).ldlt().solve(grad);
            }
            const double dec2 = -grad.dot(dz);
            Vec dx = dz;
            if (n > 0)
                dx.head(nW) = svec(Lc * smat(dz.head(nW), n) * Lc.transpose());
            return {dx, dec2, grad.norm()};
        }

        struct PathResult
        {
            Vec x;
            double t = 1.0;
            int steps = 0;
            bool converged = false; // reached m / t <= gap
            bool stopped = false;   // stop predicate fired
            bool stalled = false;   // a line search failed far from the center
            double stall_gap = 0.0; // m / t at the first stall
            double grad_norm = 0.0; // of the last centered barrier function
        };

        // Newton centering on an increasing barrier weight. `stop` is checked after each centering.
        template <class Stop>
        PathResult follow_path(const BarrierProblem &bp, Vec x, double t, double gap, double growth, int max_steps, Stop &&stop)
        {
            PathResult res;
            const double m = double(bp.num_barrier_terms());
            // squared Newton decrements: `centered` ends a centering outright; below `near` it also ends
            // once the decrement stops shrinking, since its rounding floor grows with t
            constexpr double centered = 1e-4, near = 1e-2;
            for (;;)
            {
                // centering
                double best = std::numeric_limits<double>::infinity();
                int flat = 0;
                for (int inner = 0; inner < 200; ++inner)
                {
                    if (res.steps >= max_steps)
                        break;
                    const NewtonStep ns = newton_step(bp, x, t);
                    const Vec &dx = ns.dx;
                    const double dec2 = ns.dec2;
                    ++res.steps;
                    if (!(dec2 > centered))
                        break;
                    if (dec2 < 0.5 * best)
                    {
                        best = dec2;
                        flat = 0;
                    }
                    else if (++flat >= 5 && dec2 < near)
                        break;

                    double step = 1.0;
                    bool ok = false;
                    for (int ls = 0; ls < 80; ++ls, step *= 0.5)
                    {
                        const auto d = bp.change(x, dx, step, t);
                        if (!d || *d > -0.25 * step * dec2)
                            continue;
                        const Vec xn = x + step * dx;
                        if (!bp.in_domain(xn))
                            continue;
                        x = xn;
                        ok = true;
                        break;
                    }
                    if (!ok || step < 1e-6)
                    {
                        // no progress: rounding floor, or the path was lost if the decrement is large
                        if (dec2 > near && !res.stalled)
                        {
                            res.stalled = true;
                            res.stall_gap = m / t;
                        }
                        break;
                    }
                    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e14)
                        throw SolverError("barrier iterate diverged; the subproblem is unbounded");
                }
                res.grad_norm = newton_step(bp, x, t).grad_norm;
                res.x = x;
                res.t = t;
                if (stop(x))
                {
                    res.stopped = true;
                    return res;
                }
                if (m / t <= gap)
                {
                    res.converged = true;
                    return res;
                }
                if (res.steps >= max_steps)
                    return res;
                t *= growth;
            }
        }
    }

    // Solves the subproblem. An optional hint (W, y) biases the phase-I starting point.
    inline SubproblemSolution solve(const ConvexSubproblem &sub, const SubproblemTolerances &tol = {},
                                    const std::optional<std::pair<Mat, Vec>> &hint = std::nullopt)
    {
        using namespace detail;
        const Index n = sub.dimension, p = sub.num_scalars, nW = svec_size(n);
        if (sub.objective.size() != p)
            throw DimensionError("subproblem objective length differs from scalar count");
        auto check_mat = [n](const Mat &M) {
            if (M.size() && (M.rows() != n || M.cols() != n))
                throw DimensionError("subproblem matrix has the wrong dimension");
        };
        auto check_vec = [p](const Vec &v) {
            if (v.size() && v.size() != p)
                throw DimensionError("subproblem scalar coefficients have the wrong length");
        };
        for (const auto &c : sub.log_constraints)
        {
            check_mat(c.gain);
            check_mat(c.linear_W);
            check_vec(c.linear_y);
            if (!(c.offset > 0.0))
                throw DimensionError("log constraint offset must be positive");
        }
        for (const auto &c : sub.linear_constraints)
        {
            check_mat(c.linear_W);
            check_vec(c.linear_y);
        }

        // Tr(F W) + r >= 0 with F negative definite and r <= 0 leaves only W = 0 (or nothing): the
        // cone has no interior, so solve over y alone with W fixed at zero.
        if (n > 0)
            for (const auto &c : sub.linear_constraints)
            {
                if ((c.linear_y.size() && c.linear_y.cwiseAbs().maxCoeff() > 0.0) || !c.linear_W.size() || c.constant > 0.0)
                    continue;
                Eigen::SelfAdjointEigenSolver<Mat> es(-0.5 * (c.linear_W + c.linear_W.transpose()), Eigen::EigenvaluesOnly);
                if (!(es.eigenvalues()(0) > 0.0))
                    continue;
                SubproblemSolution out;
                out.W = Mat::Zero(n, n);
                if (c.constant < 0.0)
                {
                    out.y = Vec::Zero(p);
                    out.status = SolveStatus::infeasible;
                    return out;
                }
                ConvexSubproblem reduced{0, p, sub.objective, {}, {}};
                for (const auto &l : sub.log_constraints)
                    reduced.linear_constraints.push_back({Mat(), l.linear_y, l.constant + half_log2(l.offset), l.label});
                for (const auto &l : sub.linear_constraints)
                    if (l.linear_y.size() && l.linear_y.cwiseAbs().maxCoeff() > 0.0)
                        reduced.linear_constraints.push_back({Mat(), l.linear_y, l.constant, l.label});
                    else if (l.constant < -tol.feasibility)
                    {
                        out.y = Vec::Zero(p);
                        out.status = SolveStatus::infeasible;
                        return out;
                    }
                SubproblemSolution r = solve(reduced, tol);
                out.y = r.y;
                out.objective = r.objective;
                out.status = r.status;
                out.primal_residual = r.primal_residual;
                out.dual_residual = r.dual_residual;
                out.gap = r.gap;
                out.newton_steps = r.newton_steps;
                return out;
            }

        // Variable scaling W = omega W': omega comes from the W-only constraints that bound the whole
        // cone (negative definite F), so that Tr(W') <= 1 on their feasible set.
        double omega = std::numeric_limits<double>::infinity(), omega_any = omega;
        std::vector<const LinearConstraint *> w_only;
        for (const auto &c : sub.linear_constraints)
        {
            if ((c.linear_y.size() && c.linear_y.cwiseAbs().maxCoeff() > 0.0) || !c.linear_W.size() || c.constant <= 0.0 || n == 0)
                continue;
            w_only.push_back(&c);
            const double tr = c.linear_W.trace();
            if (tr < 0.0)
                omega_any = std::min(omega_any, c.constant / -tr);
            Eigen::SelfAdjointEigenSolver<Mat> es(-0.5 * (c.linear_W + c.linear_W.transpose()), Eigen::EigenvaluesOnly);
            const double lmin = es.eigenvalues()(0);
            if (lmin > 0.0)
                omega = std::min(omega, c.constant / lmin);
        }
        if (!std::isfinite(omega))
            omega = std::isfinite(omega_any) ? omega_any * double(n) : 1.0;
        // interior start rho I satisfies every W-only constraint with half its slack
        double rho = 1.0 / double(std::max<Index>(n, 1));
        for (const auto *c : w_only)
        {
            const double tr = c->linear_W.trace();
            if (tr < 0.0)
                rho = std::min(rho, 0.5 * c->constant / (omega * -tr));
        }

        BarrierProblem bp;
        bp.n = n;
        bp.nW = nW;
        bp.nx = nW + p;
        auto make_f = [&](const Mat &F, const Vec &h) {
            Vec f = Vec::Zero(bp.nx);
            if (F.size())
                f.head(nW) = omega * svec(F);
            if (h.size())
                f.tail(p) = h;
            return f;
        };
        for (const auto &c : sub.log_constraints)
        {
            BarrierRow row;
            row.coef = inv_2ln2;
            row.q = svec(c.gain) * (omega / c.offset);
            row.f = make_f(c.linear_W, c.linear_y);
            row.r = c.constant + half_log2(c.offset);
            bp.rows.push_back(std::move(row));
        }
        for (const auto &c : sub.linear_constraints)
        {
            BarrierRow row;
            row.f = make_f(c.linear_W, c.linear_y);
            row.r = c.constant;
            // rescaling a row leaves the central path unchanged
            const double s = std::max({std::abs(row.r), row.f.cwiseAbs().maxCoeff(), 1e-300});
            row.f /= s;
            row.r /= s;
            bp.rows.push_back(std::move(row));
        }
        bp.cost = Vec::Zero(bp.nx);
        bp.cost.tail(p) = -sub.objective;

        Vec x0 = Vec::Zero(bp.nx);
        {
            Mat W0 = rho * Mat::Identity(n, n);
            Vec y0 = Vec::Zero(p);
            if (hint)
            {
                if (hint->first.rows() == n && n > 0)
                    W0 = 0.5 * hint->first / omega + 0.5 * rho * Mat::Identity(n, n);
                if (hint->second.size() == p)
                    y0 = hint->second;
            }
            x0.head(nW) = svec(W0);
            x0.tail(p) = y0;
        }

        SubproblemSolution sol;
        const int max_steps = tol.max_newton;
        int used = 0;

        double worst = -std::numeric_limits<double>::infinity();
        for (const auto &row : bp.rows)
            worst = std::max(worst, -bp.value(row, x0));

        if (!(worst < 0.0))
        {
            // Phase I: minimize s subject to h_j(x) + s > 0, W' > 0, inside a large box.
            BarrierProblem ph = bp;
            ph.nx = bp.nx + 1;
            for (auto &row : ph.rows)
            {
                row.f.conservativeResize(ph.nx);
                row.f(ph.nx - 1) = 1.0;
            }
            const double box = 1e4 * (1.0 + x0.tail(p).cwiseAbs().maxCoeff());
            for (Index l = 0; l < p; ++l)
                for (double sign : {1.0, -1.0})
                {
                    BarrierRow row;
                    row.f = Vec::Zero(ph.nx);
                    row.f(nW + l) = sign / box;
                    row.r = 1.0;
                    ph.rows.push_back(std::move(row));
                }
            if (n > 0)
            {
                BarrierRow row;
                row.f = Vec::Zero(ph.nx);
                row.f.head(nW) = -svec(Mat::Identity(n, n)) / (10.0 * (smat(x0.head(nW), n).trace() + double(n)));
                row.r = 1.0;
                ph.rows.push_back(std::move(row));
            }
            ph.cost = Vec::Zero(ph.nx);
            ph.cost(ph.nx - 1) = 1.0;

            Vec z0(ph.nx);
            z0.head(bp.nx) = x0;
            z0(ph.nx - 1) = worst + 1.0;

            auto strictly_feasible = [&](const Vec &z) { return z(ph.nx - 1) < 0.0 && bp.in_domain(z.head(bp.nx)); };
            auto r1 = follow_path(ph, z0, 1.0, 1e-10, tol.barrier_growth, max_steps, strictly_feasible);
            used += r1.steps;
            // Feasible set without interior (e.g. 0 <= c, sum c <= 0): relax every row by half the
            // feasibility tolerance, which the phase I point satisfies strictly.
            const double relax = 0.5 * tol.feasibility;
            if (!r1.stopped && r1.converged && r1.x(ph.nx - 1) < relax)
            {
                BarrierProblem relaxed = bp;
                for (auto &row : relaxed.rows)
                    row.r += relax;
                if (relaxed.in_domain(r1.x.head(bp.nx)))
                {
                    bp = std::move(relaxed);
                    r1.stopped = true;
                }
            }
            if (!r1.stopped)
            {
                sol.status = r1.converged && !r1.stalled ? SolveStatus::infeasible : SolveStatus::max_iter;
                sol.W = omega * smat(r1.x.head(nW), n);
                sol.y = r1.x.segment(nW, p);
                sol.objective = sub.objective.dot(sol.y);
                sol.primal_residual = std::max(0.0, r1.x(ph.nx - 1));
                sol.newton_steps = used;
                return sol;
            }
            x0 = r1.x.head(bp.nx);
        }

        auto never = [](const Vec &) { return false; };
        const double t0 = std::max(1.0, double(bp.num_barrier_terms()) / (1.0 + std::abs(bp.cost.dot(x0))));
        auto r2 = follow_path(bp, x0, t0, tol.gap, tol.barrier_growth, std::max(1, max_steps - used), never);
        used += r2.steps;

        const Vec &x = r2.x;
        sol.W = omega * smat(x.head(nW), n);
        sol.y = x.tail(p);
        sol.objective = sub.objective.dot(sol.y);
        sol.newton_steps = used;
        sol.gap = double(bp.num_barrier_terms()) / r2.t;
        sol.dual_residual = r2.grad_norm / r2.t;

        double viol = 0.0;
        for (const auto &c : sub.log_constraints)
            viol = std::max(viol, -evaluate(c, sol.W, sol.y) / (1.0 + std::abs(c.constant)));
        for (const auto &c : sub.linear_constraints)
            viol = std::max(viol, -evaluate(c, sol.W, sol.y) / (1.0 + std::abs(c.constant)));
        sol.primal_residual = viol;

        const bool certified = r2.converged && sol.primal_residual <= tol.feasibility && (!r2.stalled || r2.stall_gap <= tol.stall_gap);
        sol.status = certified ? SolveStatus::optimal : SolveStatus::max_iter;
        return sol;
    }

    // Plain-text dump for cross-checking with external convex solvers.
    //
    //   rsvlc-subproblem 1
    //   dimension <n>
    //   scalars <p>
    //   objective <p values>
    //   log_constraints <L>
    //   log <label>            then: offset <v> / gain (n rows) / linear_W (n rows) / linear_y <p> / constant <v>
    //   linear_constraints <M>
    //   linear <label>         then: linear_W (n rows) / linear_y <p> / constant <v>
    inline void write_subproblem(std::ostream &os, const ConvexSubproblem &sub)
    {
        const Index n = sub.dimension, p = sub.num_scalars;
        os << std::setprecision(17);
        auto write_mat = [&](const char *name, const Mat &M) {
            os << name << "\n";
            for (Index i = 0; i < n; ++i)
            {
                for (Index j = 0; j < n; ++j)
                    os << (j ? " " : "") << (M.size() ? M(i, j) : 0.0);
                os << "\n";
            }
        };
        auto write_vec = [&](const char *name, const Vec &v) {
            os << name;
            for (Index i = 0; i < p; ++i)
                os << " " << (v.size() ? v(i) : 0.0);
            os << "\n";
        };
        auto label = [](const std::string &s) { return s.empty() ? std::string("-") : s; };
        os << "rsvlc-subproblem 1\n"
           << "dimension " << n << "\nscalars " << p << "\n";
        write_vec("objective", sub.objective);
        os << "log_constraints " << sub.log_constraints.size() << "\n";
        for (const auto &c : sub.log_constraints)
        {
            os << "log " << label(c.label) << "\noffset " << c.offset << "\n";
            write_mat("gain", c.gain);
            write_mat("linear_W", c.linear_W);
            write_vec("linear_y", c.linear_y);
            os << "constant " << c.constant << "\n";
        }
        os << "linear_constraints " << sub.linear_constraints.size() << "\n";
        for (const auto &c : sub.linear_constraints)
        {
            os << "linear " << label(c.label) << "\n";
            write_mat("linear_W", c.linear_W);
            write_vec("linear_y", c.linear_y);
            os << "constant " << c.constant << "\n";
        }
    }

    inline ConvexSubproblem read_subproblem(std::istream &is)
    {
        auto expect = [&](const std::string &key) {
            std::string k;
            if (!(is >> k) || k != key)
                throw Error("subproblem dump: expected '" + key + "', got '" + k + "'");
        };
        ConvexSubproblem sub;
        int version = 0;
        expect("rsvlc-subproblem");
        is >> version;
        if (version != 1)
            throw Error("subproblem dump: unsupported version");
        expect("dimension");
        is >> sub.dimension;
        expect("scalars");
        is >> sub.num_scalars;
        const Index n = sub.dimension, p = sub.num_scalars;
        auto read_vec = [&](const std::string &name) {
            expect(name);
            Vec v(p);
            for (Index i = 0; i < p; ++i)
                is >> v(i);
            return v;
        };
        auto read_mat = [&](const std::string &name) {
            expect(name);
            Mat M(n, n);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j)
                    is >> M(i, j);
            return M;
        };
        auto read_label = [&]() {
            std::string s;
            is >> s;
            return s == "-" ? std::string() : s;
        };
        sub.objective = read_vec("objective");
        std::size_t count = 0;
        expect("log_constraints");
        is >> count;
        for (std::size_t c = 0; c < count; ++c)
        {
            LogConstraint lc;
            expect("log");
            lc.label = read_label();
            expect("offset");
            is >> lc.offset;
            lc.gain = read_mat("gain");
            lc.linear_W = read_mat("linear_W");
            lc.linear_y = read_vec("linear_y");
            expect("constant");
            is >> lc.constant;
            sub.log_constraints.push_back(std::move(lc));
        }
        expect("linear_constraints");
        is >> count;
        for (std::size_t c = 0; c < count; ++c)
        {
            LinearConstraint lc;
            expect("linear");
            lc.label = read_label();
            lc.linear_W = read_mat("linear_W");
            lc.linear_y = read_vec("linear_y");
            expect("constant");
            is >> lc.constant;
            sub.linear_constraints.push_back(std::move(lc));
        }
        if (!is)
            throw Error("subproblem dump: truncated input");
        return sub;
    }
}
