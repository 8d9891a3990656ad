#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "dob/transfer_function.hpp"

namespace dob {

/// x' = A x + B u, y = C x + D u.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;

    [[nodiscard]] Eigen::Index order() const { return A.rows(); }
    [[nodiscard]] Eigen::Index inputs() const { return B.cols(); }
    [[nodiscard]] Eigen::Index outputs() const { return C.rows(); }

    /// Throws dob::Error if the four matrices do not fit together.
    void validate() const;
};

/// Controllable canonical realization (companion A, B = e_n). Requires properness.
StateSpace tf_to_statespace(const TransferFunction& tf);

/// SISO transfer function of one input/output channel, via det(sI - A + B C) - det(sI - A).
TransferFunction statespace_to_tf(const StateSpace& ss, Eigen::Index input = 0, Eigen::Index output = 0);

/// C (jwI - A)^{-1} B + D for one channel at every w.
std::vector<Complex> freq_response(const StateSpace& ss, std::span<const double> omegas, Eigen::Index input = 0,
                                   Eigen::Index output = 0);

std::vector<Complex> eigenvalues(const Eigen::MatrixXd& A);
double max_real_eigenvalue(const Eigen::MatrixXd& A);

/// Input/output ordering of closed_loop_statespace.
enum LoopInput : Eigen::Index { kInputR = 0, kInputD = 1, kInputN = 2 };
enum LoopOutput : Eigen::Index { kOutputY = 0, kOutputU = 1 };

/// Realization orders of the four blocks inside the interconnection; states are
/// stacked in this order: plant, Pn^{-1}Q, Q, controller.
struct LoopBlocks {
    Eigen::Index plant = 0;
    Eigen::Index inverse_q = 0;
    Eigen::Index q = 0;
    Eigen::Index controller = 0;
};

struct ClosedLoop {
    StateSpace ss;  // inputs (r, d, n), outputs (y, u)
    LoopBlocks blocks;
};

/// State-space model of the DOB loop:
///   ubar = C (r - y - n),  u = ubar - Pn^{-1}Q (y + n) + Q u,  y = P (u + d)
/// assembled from separate realizations of P, Pn^{-1}Q, Q and C so that no
/// pole-zero cancellation hides an internal mode. Q = 0 disables the DOB.
ClosedLoop closed_loop_statespace(const TransferFunction& plant, const TransferFunction& nominal,
                                  const TransferFunction& controller, const TransferFunction& q);

/// The three closed-form transfer functions of the loop output:
///   den = Pn (1 + P C) + Q (P - Pn)
///   y = Pn P C / den r + Pn P (1 - Q) / den d - P (Q + Pn C) / den n
struct LoopTransfers {
    TransferFunction r_to_y;
    TransferFunction d_to_y;
    TransferFunction n_to_y;
};

LoopTransfers loop_transfers(const TransferFunction& plant, const TransferFunction& nominal,
                             const TransferFunction& controller, const TransferFunction& q);

}  // namespace dob
