#include "dob/state_space.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

#include "dob/error.hpp"

namespace dob {

void StateSpace::validate() const {
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols()) {
        std::ostringstream msg;
        msg << "inconsistent state-space dimensions: A " << A.rows() << "x" << A.cols() << ", B " << B.rows()
            << "x" << B.cols() << ", C " << C.rows() << "x" << C.cols() << ", D " << D.rows() << "x" << D.cols();
        throw Error(msg.str());
    }
}

StateSpace tf_to_statespace(const TransferFunction& tf) {
    if (!tf.is_proper()) throw Error("realization requires properness");
    StateSpace ss;
    if (tf.is_zero()) {
        ss.A.resize(0, 0);
        ss.B.resize(0, 1);
        ss.C.resize(1, 0);
        ss.D = Eigen::MatrixXd::Zero(1, 1);
        return ss;
    }
    const Polynomial& den = tf.den();
    const int n = den.degree();
    const double lead = den.leading();
    const double feedthrough = tf.num()[n] / lead;

    ss.A = Eigen::MatrixXd::Zero(n, n);
    ss.B = Eigen::MatrixXd::Zero(n, 1);
    ss.C = Eigen::MatrixXd::Zero(1, n);
    ss.D = Eigen::MatrixXd::Constant(1, 1, feedthrough);
    if (n == 0) return ss;
    for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
    for (int k = 0; k < n; ++k) {
        const double a = den[k] / lead;
        ss.A(n - 1, k) = -a;
        ss.C(0, k) = tf.num()[k] / lead - feedthrough * a;
    }
    ss.B(n - 1, 0) = 1.0;
    return ss;
}

std::vector<Complex> eigenvalues(const Eigen::MatrixXd& A) {
    std::vector<Complex> out;
    if (A.rows() == 0) return out;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    if (solver.info() != Eigen::Success) throw Error("eigenvalue iteration failed");
    out.reserve(static_cast<std::size_t>(A.rows()));
    for (Eigen::Index i = 0; i < A.rows(); ++i) out.push_back(solver.eigenvalues()[i]);
    return out;
}

double max_real_eigenvalue(const Eigen::MatrixXd& A) {
    double m = -std::numeric_limits<double>::infinity();
    for (const Complex& l : eigenvalues(A)) m = std::max(m, l.real());
    return m;
}

namespace {

Polynomial char_poly(const Eigen::MatrixXd& A) {
    const auto ev = eigenvalues(A);
    return Polynomial::from_roots(ev);
}

// Osborne balancing in place: M <- D^{-1} M D with D returned, powers of two only.
Eigen::VectorXd balance(Eigen::MatrixXcd& M) {
    const Eigen::Index n = M.rows();
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
    for (int sweep = 0; sweep < 50; ++sweep) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double col = 0.0, row = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                col += std::abs(M(j, i));
                row += std::abs(M(i, j));
            }
            if (col == 0.0 || row == 0.0) continue;
            double f = 1.0;
            const double total = col + row;
            while (col < row / 2.0) {
                col *= 2.0;
                row /= 2.0;
                f *= 2.0;
            }
            while (col > row * 2.0) {
                col /= 2.0;
                row *= 2.0;
                f /= 2.0;
            }
            if ((col + row) < 0.95 * total) {
                changed = true;
                d(i) *= f;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
        if (!changed) break;
    }
    return d;
}

void check_channel(const StateSpace& ss, Eigen::Index input, Eigen::Index output) {
    ss.validate();
    if (input < 0 || input >= ss.inputs() || output < 0 || output >= ss.outputs())
        throw Error("state-space channel index out of range");
}

}  // namespace

TransferFunction statespace_to_tf(const StateSpace& ss, Eigen::Index input, Eigen::Index output) {
    check_channel(ss, input, output);
    const Polynomial open = char_poly(ss.A);
    const double d = ss.D(output, input);
    if (ss.order() == 0) return TransferFunction::gain(d);
    const Eigen::MatrixXd closed = ss.A - ss.B.col(input) * ss.C.row(output);
    const Polynomial num = (char_poly(closed) - open) + d * open;
    return {num, open};
}

std::vector<Complex> freq_response(const StateSpace& ss, std::span<const double> omegas, Eigen::Index input,
                                   Eigen::Index output) {
    check_channel(ss, input, output);
    const auto n = ss.order();
    std::vector<Complex> out;
    out.reserve(omegas.size());
    const Eigen::VectorXcd b = ss.B.col(input).cast<Complex>();
    const Eigen::RowVectorXcd c = ss.C.row(output).cast<Complex>();
    for (double w : omegas) {
        Complex value = ss.D(output, input);
        if (n > 0) {
            Eigen::MatrixXcd M = -ss.A.cast<Complex>();
            M.diagonal().array() += Complex{0.0, w};
            const Eigen::VectorXd scale = balance(M);
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
            const Eigen::VectorXcd y = lu.solve((b.array() / scale.array()).matrix());
            value += (c * (scale.array() * y.array()).matrix())(0, 0);
        }
        out.push_back(value);
    }
    return out;
}

ClosedLoop closed_loop_statespace(const TransferFunction& plant, const TransferFunction& nominal,
                                  const TransferFunction& controller, const TransferFunction& q) {
    if (!plant.is_strictly_proper()) throw Error("closed loop: plant P must be strictly proper");
    if (!nominal.is_strictly_proper()) throw Error("closed loop: nominal model Pn must be strictly proper");
    if (nominal.num().is_zero()) throw Error("closed loop: nominal model Pn has a zero numerator");
    if (!controller.is_proper()) throw Error("closed loop: controller C must be proper");
    if (!q.is_zero()) {
        if (!q.is_strictly_proper()) throw Error("closed loop: Q must be strictly proper");
        if (q.relative_degree() < nominal.relative_degree())
            throw Error("closed loop: relative degree of Q must be >= relative degree of Pn");
    }

    const TransferFunction inverse_q = q.is_zero() ? TransferFunction{} : q * nominal.inverse();
    const StateSpace sp = tf_to_statespace(plant);
    const StateSpace sw = tf_to_statespace(inverse_q);
    const StateSpace sq = tf_to_statespace(q);
    const StateSpace sc = tf_to_statespace(controller);

    ClosedLoop loop;
    loop.blocks = {sp.order(), sw.order(), sq.order(), sc.order()};
    const Eigen::Index np = sp.order(), nw = sw.order(), nq = sq.order(), nc = sc.order();
    const Eigen::Index ip = 0, iw = np, iq = np + nw, ic = np + nw + nq, n = ic + nc;
    const double dc = sc.D(0, 0), dw = sw.D(0, 0);

    // u = Ku x + Lu [r d n]
    Eigen::RowVectorXd Ku = Eigen::RowVectorXd::Zero(n);
    Ku.segment(ip, np) = -(dc + dw) * sp.C.row(0);
    Ku.segment(iw, nw) = -sw.C.row(0);
    Ku.segment(iq, nq) = sq.C.row(0);
    Ku.segment(ic, nc) = sc.C.row(0);
    Eigen::RowVector3d Lu(dc, 0.0, -dc - dw);

    Eigen::RowVectorXd Cy = Eigen::RowVectorXd::Zero(n);
    Cy.segment(ip, np) = sp.C.row(0);

    StateSpace& ss = loop.ss;
    ss.A = Eigen::MatrixXd::Zero(n, n);
    ss.B = Eigen::MatrixXd::Zero(n, 3);
    // plant: x' = Ap x + Bp (u + d)
    ss.A.block(ip, ip, np, np) += sp.A;
    ss.A.block(ip, 0, np, n) += sp.B * Ku;
    ss.B.block(ip, 0, np, 3) += sp.B * Lu;
    ss.B.block(ip, kInputD, np, 1) += sp.B;
    // Pn^{-1}Q: driven by y + n
    ss.A.block(iw, iw, nw, nw) += sw.A;
    ss.A.block(iw, 0, nw, n) += sw.B * Cy;
    ss.B.block(iw, kInputN, nw, 1) += sw.B;
    // Q: driven by u
    ss.A.block(iq, iq, nq, nq) += sq.A;
    ss.A.block(iq, 0, nq, n) += sq.B * Ku;
    ss.B.block(iq, 0, nq, 3) += sq.B * Lu;
    // C: driven by r - y - n
    ss.A.block(ic, ic, nc, nc) += sc.A;
    ss.A.block(ic, 0, nc, n) -= sc.B * Cy;
    ss.B.block(ic, kInputR, nc, 1) += sc.B;
    ss.B.block(ic, kInputN, nc, 1) -= sc.B;

    ss.C = Eigen::MatrixXd::Zero(2, n);
    ss.C.row(kOutputY) = Cy;
    ss.C.row(kOutputU) = Ku;
    ss.D = Eigen::MatrixXd::Zero(2, 3);
    ss.D.row(kOutputU) = Lu;
    return loop;
}

LoopTransfers loop_transfers(const TransferFunction& plant, const TransferFunction& nominal,
                             const TransferFunction& controller, const TransferFunction& q) {
    const TransferFunction one = TransferFunction::gain(1.0);
    const TransferFunction den = nominal * (one + plant * controller) + q * (plant - nominal);
    const TransferFunction inv = den.inverse();
    return {nominal * plant * controller * inv, nominal * plant * (one - q) * inv,
            -(plant * (q + nominal * controller) * inv)};
}

}  // namespace dob
