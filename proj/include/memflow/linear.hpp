#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "memflow/errors.hpp"

namespace memflow {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct SolveInfo {
    int iterations = 0;
    double residual = 0.0;   ///< final |A x - b|_2 / max(|b|_2, tiny)
    bool converged = true;
};

/// Preconditioned conjugate gradients for SPD systems (pressure).
/// tol is relative to |b|_2; pass a guess to warm-start corrector loops.
inline SolveInfo solve_cg(const SpMat& A, const Vec& b, Vec& x, double tol, int max_iter,
                          const Vec* guess = nullptr) {
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x = Vec::Zero(A.rows());
        return {0, 0.0, true};
    }
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(max_iter);
    cg.compute(A);
    if (cg.info() != Eigen::Success)
        throw SolverError("solve_cg: preconditioner setup failed");
    x = guess ? cg.solveWithGuess(b, *guess).eval() : cg.solve(b).eval();
    SolveInfo info;
    info.iterations = static_cast<int>(cg.iterations());
    info.residual = (A * x - b).norm() / bnorm;
    info.converged = info.residual <= tol * 8.0;  // allow slack for the implicit estimate
    return info;
}

/// Stabilized bi-conjugate gradients for the nonsymmetric momentum and
/// species systems; diagonal preconditioning suffices for these
/// diagonally dominant matrices.
inline SolveInfo solve_bicgstab(const SpMat& A, const Vec& b, Vec& x, double tol,
                                int max_iter, const Vec* guess = nullptr) {
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x = Vec::Zero(A.rows());
        return {0, 0.0, true};
    }
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setTolerance(tol);
    solver.setMaxIterations(max_iter);
    solver.compute(A);
    x = guess ? solver.solveWithGuess(b, *guess).eval() : solver.solve(b).eval();
    SolveInfo info;
    info.iterations = static_cast<int>(solver.iterations());
    info.residual = (A * x - b).norm() / bnorm;
    info.converged = info.residual <= tol * 8.0;
    return info;
}

} // namespace memflow
