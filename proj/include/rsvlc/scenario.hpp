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

#include "rsvlc/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rsvlc
{
    // Physical and signal configuration of one downlink.
    //
    // Stream indexing: stream 0 is the common stream, stream k + 1 is the private stream of user k
    // (users are 0-based). Per-stream vectors therefore have K + 1 entries.
    struct ScenarioConfig
    {
        Eigen::Vector3d room_dims{7.0, 7.0, 5.0};       // width, depth, height [m]
        std::vector<Eigen::Vector3d> led_positions;    // N ceiling points [m]
        std::vector<Eigen::Vector3d> user_positions;   // K receiver points [m]
        double lambertian_order = 1.0;                 // m
        double receiver_area = 1.0e-4;                 // A_r [m^2]
        double fov_semi_angle = std::numbers::pi / 3;  // [rad]
        double optical_filter_gain = 1.0;              // T_s
        double concentrator_gain = 1.0;                // g_c
        std::vector<double> noise_variance;            // sigma_k^2 per user
        double max_current = 1.0;                      // I_H [A]
        double dc_bias = 0.5;                          // b [A], identical on every LED
        std::vector<double> signal_amplitude;          // A_i, K + 1 entries
        std::vector<double> signal_variance;           // epsilon_i, K + 1 entries
        double electrical_budget = 1.0;                // P_t

        std::size_t num_leds() const { return led_positions.size(); }
        std::size_t num_users() const { return user_positions.size(); }

        // min{b, I_H - b}: largest admissible |a_n^T w| on each LED
        double peak_margin() const { return std::min(dc_bias, max_current - dc_bias); }
    };

    // K x N nonnegative LOS gains; row k is g_k^T.
    struct ChannelMatrix
    {
        Mat gains;

        Index num_users() const { return gains.rows(); }
        Index num_leds() const { return gains.cols(); }
        Vec row(Index k) const { return gains.row(k).transpose(); }
    };

    // Lambertian line-of-sight gain between a downward LED and an upward receiver.
    inline double los_gain(const ScenarioConfig &cfg, const Eigen::Vector3d &led, const Eigen::Vector3d &user)
    {
        const Eigen::Vector3d d = user - led;
        const double dist = d.norm();
        if (!(dist > 0.0))
            throw DegenerateGeometryError("user collocated with LED");

        const double cos_angle = (led.z() - user.z()) / dist; // irradiance == incidence for parallel planes
        if (cos_angle <= 0.0 || std::acos(std::min(cos_angle, 1.0)) > cfg.fov_semi_angle)
            return 0.0;

        const double m = cfg.lambertian_order;
        return (m + 1.0) * cfg.receiver_area / (two_pi * dist * dist) * std::pow(cos_angle, m) *
               cfg.optical_filter_gain * cfg.concentrator_gain * cos_angle;
    }

    inline ChannelMatrix generate_channel(const ScenarioConfig &cfg)
    {
        const auto K = static_cast<Index>(cfg.num_users());
        const auto N = static_cast<Index>(cfg.num_leds());
        ChannelMatrix ch{Mat::Zero(K, N)};
        for (Index k = 0; k < K; ++k)
            for (Index n = 0; n < N; ++n)
                ch.gains(k, n) = los_gain(cfg, cfg.led_positions[std::size_t(n)], cfg.user_positions[std::size_t(k)]);
        return ch;
    }

    // Empty iff the configuration is usable; each entry starts with the offending field name.
    inline std::vector<std::string> validate_scenario(const ScenarioConfig &cfg)
    {
        std::vector<std::string> v;
        const std::size_t N = cfg.num_leds(), K = cfg.num_users();
        const auto &room = cfg.room_dims;

        if (!(room.minCoeff() > 0.0))
            v.push_back("room_dims must be positive");
        if (N < 1)
            v.push_back("led_positions must contain at least one LED");
        if (K < 1)
            v.push_back("user_positions must contain at least one user");

        constexpr double tol = 1e-9;
        for (std::size_t n = 0; n < N; ++n)
        {
            const auto &p = cfg.led_positions[n];
            if (p.x() < -tol || p.x() > room.x() + tol || p.y() < -tol || p.y() > room.y() + tol ||
                std::abs(p.z() - room.z()) > tol)
                v.push_back("led_positions[" + std::to_string(n) + "] must lie on the ceiling inside the room");
        }
        for (std::size_t k = 0; k < K; ++k)
        {
            const auto &p = cfg.user_positions[k];
            if (p.x() < -tol || p.x() > room.x() + tol || p.y() < -tol || p.y() > room.y() + tol ||
                p.z() < -tol || p.z() >= room.z())
                v.push_back("user_positions[" + std::to_string(k) + "] must lie inside the room below the ceiling");
        }

        if (!(cfg.lambertian_order > 0.0))
            v.push_back("lambertian_order must be positive");
        if (!(cfg.receiver_area > 0.0))
            v.push_back("receiver_area must be positive");
        if (!(cfg.fov_semi_angle > 0.0 && cfg.fov_semi_angle <= std::numbers::pi / 2))
            v.push_back("fov_semi_angle must be in (0, pi/2]");
        if (!(cfg.optical_filter_gain > 0.0))
            v.push_back("optical_filter_gain must be positive");
        if (!(cfg.concentrator_gain > 0.0))
            v.push_back("concentrator_gain must be positive");

        if (cfg.noise_variance.size() != K)
            v.push_back("noise_variance must have one entry per user");
        for (std::size_t k = 0; k < cfg.noise_variance.size(); ++k)
            if (!(cfg.noise_variance[k] > 0.0))
                v.push_back("noise_variance[" + std::to_string(k) + "] must be positive");

        if (!(cfg.max_current > 0.0))
            v.push_back("max_current must be positive");
        if (!(cfg.dc_bias > 0.0 && cfg.dc_bias < cfg.max_current))
            v.push_back("dc_bias must satisfy 0 < b < I_H");

        if (cfg.signal_amplitude.size() != K + 1)
            v.push_back("signal_amplitude must have K + 1 entries");
        if (cfg.signal_variance.size() != K + 1)
            v.push_back("signal_variance must have K + 1 entries");
        for (std::size_t i = 0; i < cfg.signal_amplitude.size(); ++i)
            if (!(cfg.signal_amplitude[i] > 0.0))
                v.push_back("signal_amplitude[" + std::to_string(i) + "] must be positive");
        for (std::size_t i = 0; i < cfg.signal_variance.size(); ++i)
        {
            const double A = i < cfg.signal_amplitude.size() ? cfg.signal_amplitude[i] : 0.0;
            const double e = cfg.signal_variance[i];
            if (!(e > 0.0 && e < A * A))
                v.push_back("signal_variance[" + std::to_string(i) + "] must lie in (0, A_i^2)");
        }

        if (!(cfg.electrical_budget > 0.0))
            v.push_back("electrical_budget must be positive");
        return v;
    }

    // Named receiver spots used by the default experiments: U1/U2 mirrored about the room center,
    // U3/U4 in opposite corners.
    inline Eigen::Vector3d default_user_position(int which)
    {
        switch (which)
        {
        case 1: return {3.0, 3.5, 0.85};
        case 2: return {4.0, 3.5, 0.85};
        case 3: return {1.0, 1.0, 0.85};
        case 4: return {6.0, 6.0, 0.85};
        default: throw Error("default user positions are U1..U4");
        }
    }

    // 7 x 7 x 5 m room, four LEDs at (+-1.75, +-1.75) m from the ceiling center, users at U1 and U2.
    inline ScenarioConfig default_scenario()
    {
        ScenarioConfig cfg;
        const double cx = cfg.room_dims.x() / 2, cy = cfg.room_dims.y() / 2, h = cfg.room_dims.z();
        for (double dx : {-1.75, 1.75})
            for (double dy : {-1.75, 1.75})
                cfg.led_positions.emplace_back(cx + dx, cy + dy, h);
        cfg.user_positions = {default_user_position(1), default_user_position(2)};
        cfg.noise_variance = {1.0e-13, 1.0e-13};
        cfg.max_current = 1.0;
        cfg.dc_bias = 0.5;
        cfg.signal_amplitude = {1.0, 1.0, 1.0};
        cfg.signal_variance = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        cfg.electrical_budget = 1.0;
        return cfg;
    }
}
