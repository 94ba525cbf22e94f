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

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace rsvlc
{
    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;
    using Index = Eigen::Index;

    inline constexpr double two_pi = 2.0 * std::numbers::pi;

    // Base of all library errors
    struct Error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct DimensionError : Error
    {
        using Error::Error;
    };

    struct DegenerateGeometryError : Error
    {
        using Error::Error;
    };

    struct InfeasibleMomentError : Error
    {
        using Error::Error;
    };

    struct NumericalError : Error
    {
        using Error::Error;
    };

    struct InfeasibleSharesError : Error
    {
        double slack; // R_c - sum(c), negative
        InfeasibleSharesError(const std::string &what, double slack_) : Error(what), slack(slack_) {}
    };

    struct SolverError : Error
    {
        int iteration = -1; // SCA iteration that failed, -1 if not applicable
        SolverError(const std::string &what, int iteration_ = -1) : Error(what), iteration(iteration_) {}
    };

    // 0.5 * log2(x)
    inline double half_log2(double x) { return 0.5 * std::log2(x); }
}
