#pragma once

#include "iqcloc/matrixcore.hpp"

#include <vector>

namespace iqcloc {

// Continuous-time plant
//   x'  = A x  + B1 v + B2 u
//   y   = C1 x + D11 v + D12 u
//   y_m = C2 x + D21 v
// with performance channel v -> y and control channel u -> y_m.
struct StateSpace {
    Mat A, B1, B2, C1, D11, D12, C2, D21;

    int n() const { return static_cast<int>(A.rows()); }
    int n_v() const { return static_cast<int>(B1.cols()); }
    int n_u() const { return static_cast<int>(B2.cols()); }
    int n_y() const { return static_cast<int>(C1.rows()); }
    int n_m() const { return static_cast<int>(C2.rows()); }

    // Throws DimensionMismatch / InvalidArgument.
    void check() const;

    // Plant without control or measurement channels.
    static StateSpace open_loop(const Mat& a, const Mat& b, const Mat& c, const Mat& d);
};

struct Controller {
    Mat Ac, Bc, Cc, Dc;

    int n_c() const { return static_cast<int>(Ac.rows()); }
    static Controller zero(int n_u, int n_m, int n_c = 0);
    // [Ac Bc; Cc Dc]
    Mat packed() const;
    static Controller unpack(const Mat& k, int n_c);
};

struct ClosedLoop {
    Mat A, B, C, D;

    int n() const { return static_cast<int>(A.rows()); }
    int n_v() const { return static_cast<int>(B.cols()); }
    int n_y() const { return static_cast<int>(C.rows()); }
    void check() const;
};

ClosedLoop close_loop(const StateSpace& plant, const Controller& ctrl);
// Performance channel of the plant with u = 0.
ClosedLoop open_loop_channel(const StateSpace& plant);

bool is_hurwitz(const Mat& a, double margin = 0.0);

// 400 log-spaced frequencies on [1e-3, 1e3] rad/s, preceded by 0.
std::vector<double> default_frequency_grid();

// max over the grid of sigma_max(C (jwI - A)^{-1} B + D). Throws Unstable when
// A is not Hurwitz.
double freq_gain_oracle(const ClosedLoop& sys, const std::vector<double>& w_grid);
double freq_gain_oracle(const ClosedLoop& sys);

// Uniformly sampled vector signal.
struct Signal {
    double dt = 0.0;
    std::vector<Vec> samples;

    std::size_t size() const { return samples.size(); }
    // Rectangle-rule integral of |s(t)|^2.
    double energy() const;
};

struct Trajectory {
    Signal states;
    Signal outputs;
};

// 0.1 / sigma_max(A) clamped to [1e-4, 1e-2].
double default_step(const ClosedLoop& sys);

// Fixed-step RK4 from x(0) = 0. The input is linearly interpolated between
// samples; each sample interval is split into substeps no longer than
// default_step(sys). States and outputs are reported at the input samples.
Trajectory simulate(const ClosedLoop& sys, const Signal& input);

}  // namespace iqcloc
