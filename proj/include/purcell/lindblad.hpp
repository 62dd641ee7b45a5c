#pragma once

#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "purcell/errors.hpp"

namespace purcell {

/// Parameters of the single-transition emitter + cavity master equation.
/// All rates are FWHM-style frequencies in THz (nu convention); the
/// Liouvillian applies the 2*pi angular conversion internally, so time is
/// measured in picoseconds.
struct MasterEquationSpec {
    double g = 0.0;          // coherent coupling rate
    double kappa = 0.0;      // cavity FWHM
    double gamma = 0.0;      // transition radiative rate
    double dephasing = 0.0;  // pure dephasing (FWHM contribution)
    double detuning = 0.0;   // nu_transition - nu_cavity
    int photon_cutoff = 2;
    double pump = 0.0;       // incoherent excitation rate of |e>

    void validate() const {
        if (g < 0.0 || kappa < 0.0 || gamma < 0.0 || dephasing < 0.0 || pump < 0.0)
            throw precondition_error("MasterEquationSpec: rates must be >= 0");
        if (photon_cutoff < 1)
            throw precondition_error("MasterEquationSpec: photon_cutoff must be >= 1");
    }

    int hilbert_dim() const { return 2 * (photon_cutoff + 1); }
};

namespace detail {

using CMat = Eigen::MatrixXcd;

// Basis ordering: atom (|g>, |e>) tensor photon number (0..cutoff).
inline CMat atom_lower(int nc) {
    CMat s = CMat::Zero(2, 2);
    s(0, 1) = 1.0;  // |g><e|
    return kroneckerProduct(s, CMat::Identity(nc + 1, nc + 1)).eval();
}

inline CMat photon_annihilate(int nc) {
    CMat a = CMat::Zero(nc + 1, nc + 1);
    for (int n = 1; n <= nc; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return kroneckerProduct(CMat::Identity(2, 2), a).eval();
}

// Column-stacking superoperator for the dissipator D[C].
inline CMat dissipator(const CMat& c) {
    const auto dim = c.rows();
    const CMat cdc = c.adjoint() * c;
    const CMat id = CMat::Identity(dim, dim);
    return kroneckerProduct(c.conjugate(), c).eval() -
           0.5 * kroneckerProduct(id, cdc).eval() -
           0.5 * kroneckerProduct(cdc.transpose(), id).eval();
}

}  // namespace detail

/// Dense column-stacking Liouvillian of the Lindblad generator:
/// H = detuning sigma+ sigma- + g (a sigma+ + a^dag sigma-) in the cavity
/// frame, with dissipators kappa on a, gamma on sigma-, dephasing on
/// sigma+ sigma-, and pump on sigma+. Units: entries in rad/ps.
inline Eigen::MatrixXcd build_liouvillian(const MasterEquationSpec& spec) {
    spec.validate();
    const int dim = spec.hilbert_dim();
    if (dim * dim > 4096)
        throw resource_error("build_liouvillian: superoperator dimension exceeds 4096");

    using detail::CMat;
    const int nc = spec.photon_cutoff;
    const CMat sm = detail::atom_lower(nc);
    const CMat sp = sm.adjoint();
    const CMat a = detail::photon_annihilate(nc);
    const CMat proj_e = sp * sm;

    const CMat h = spec.detuning * proj_e + spec.g * (a * sp + a.adjoint() * sm);
    const CMat id = CMat::Identity(dim, dim);

    const double two_pi = 2.0 * M_PI;
    const std::complex<double> i_unit(0.0, 1.0);
    CMat liou = -i_unit * two_pi *
                (kroneckerProduct(id, h).eval() - kroneckerProduct(h.transpose(), id).eval());
    if (spec.kappa > 0.0) liou += two_pi * spec.kappa * detail::dissipator(a);
    if (spec.gamma > 0.0) liou += two_pi * spec.gamma * detail::dissipator(sm);
    if (spec.dephasing > 0.0) liou += two_pi * spec.dephasing * detail::dissipator(proj_e);
    if (spec.pump > 0.0) liou += two_pi * spec.pump * detail::dissipator(sp);
    return liou;
}

/// Propagate a density matrix for time t_ps under the generator (tests and
/// diagnostics; dense matrix exponential).
inline Eigen::MatrixXcd propagate(const Eigen::MatrixXcd& liouvillian,
                                  const Eigen::MatrixXcd& rho0, double t_ps) {
    const Eigen::Index dim = rho0.rows();
    if (dim * dim != liouvillian.rows())
        throw precondition_error("propagate: dimension mismatch");
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), dim * dim);
    const Eigen::MatrixXcd u = (liouvillian * t_ps).exp();
    Eigen::VectorXcd w = u * v;
    return Eigen::Map<const Eigen::MatrixXcd>(w.data(), dim, dim);
}

/// Steady state of the Liouvillian: solves L rho = 0 with the trace
/// constraint replacing the first row of the system.
inline Eigen::MatrixXcd steady_state(const MasterEquationSpec& spec) {
    const Eigen::MatrixXcd liou = build_liouvillian(spec);
    const int dim = spec.hilbert_dim();
    const int dim2 = dim * dim;

    Eigen::MatrixXcd sys = liou;
    sys.row(0).setZero();
    for (int i = 0; i < dim; ++i) sys(0, i * dim + i) = 1.0;  // trace row
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim2);
    rhs(0) = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys);
    Eigen::VectorXcd v = lu.solve(rhs);
    const double residual = (sys * v - rhs).norm();
    if (!v.allFinite() || residual > 1e-8)
        throw numerical_error("steady_state: singular Liouvillian system, residual " +
                              std::to_string(residual));

    Eigen::MatrixXcd rho = Eigen::Map<const Eigen::MatrixXcd>(v.data(), dim, dim);
    rho = 0.5 * (rho + rho.adjoint()).eval();  // enforce Hermiticity
    rho /= rho.trace().real();
    return rho;
}

/// Photon emission rate through the cavity mirror per excited-state
/// population: kappa <a^dag a> / <sigma+ sigma->, in THz. Valid as an
/// emission-rate oracle in the weak-pump limit.
inline double steady_state_cavity_rate(const MasterEquationSpec& spec) {
    if (!(spec.pump > 0.0))
        throw precondition_error("steady_state_cavity_rate: pump must be > 0");
    const Eigen::MatrixXcd rho = steady_state(spec);
    const int nc = spec.photon_cutoff;
    const detail::CMat a = detail::photon_annihilate(nc);
    const detail::CMat sm = detail::atom_lower(nc);
    const double n_phot = (a.adjoint() * a * rho).trace().real();
    const double p_exc = (sm.adjoint() * sm * rho).trace().real();
    if (p_exc <= 0.0)
        throw numerical_error("steady_state_cavity_rate: vanishing excited population");
    return spec.kappa * n_phot / p_exc;
}

}  // namespace purcell
