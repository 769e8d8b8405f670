#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace kgwave::detail {

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Restarted GMRES(m) with right preconditioning: solves A x = b, using x as the initial guess.
template <class ApplyA, class ApplyM>
GmresResult gmres(ApplyA A, ApplyM M, const Eigen::VectorXd& b, Eigen::VectorXd& x, double rtol, int restart,
                  int max_iters) {
  using Eigen::VectorXd;
  GmresResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  if (x.size() != b.size()) x = VectorXd::Zero(b.size());
  while (res.iterations < max_iters) {
    VectorXd r = b - A(x);
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    const int m = restart;
    std::vector<VectorXd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    std::vector<double> cs(m), sn(m);
    VectorXd g = VectorXd::Zero(m + 1);
    g[0] = beta;
    std::vector<VectorXd> Z;
    Z.reserve(m);
    int used = 0;
    for (int i = 0; i < m && res.iterations < max_iters; ++i) {
      Z.push_back(M(V[i]));
      VectorXd w = A(Z[i]);
      for (int k = 0; k <= i; ++k) {
        H(k, i) = V[k].dot(w);
        w -= H(k, i) * V[k];
      }
      for (int k = 0; k <= i; ++k) {  // second Gram-Schmidt pass
        double c = V[k].dot(w);
        H(k, i) += c;
        w -= c * V[k];
      }
      H(i + 1, i) = w.norm();
      V.push_back(H(i + 1, i) > 0 ? VectorXd(w / H(i + 1, i)) : VectorXd(w));
      for (int k = 0; k < i; ++k) {
        double t = cs[k] * H(k, i) + sn[k] * H(k + 1, i);
        H(k + 1, i) = -sn[k] * H(k, i) + cs[k] * H(k + 1, i);
        H(k, i) = t;
      }
      double d = std::hypot(H(i, i), H(i + 1, i));
      cs[i] = d == 0 ? 1.0 : H(i, i) / d;
      sn[i] = d == 0 ? 0.0 : H(i + 1, i) / d;
      H(i, i) = d;
      H(i + 1, i) = 0.0;
      g[i + 1] = -sn[i] * g[i];
      g[i] = cs[i] * g[i];
      ++res.iterations;
      used = i + 1;
      res.relative_residual = std::abs(g[i + 1]) / bnorm;
      if (res.relative_residual <= rtol) break;
    }
    VectorXd y = H.topLeftCorner(used, used).triangularView<Eigen::Upper>().solve(g.head(used));
    for (int k = 0; k < used; ++k) x += y[k] * Z[k];
  }
  VectorXd r = b - A(x);
  res.relative_residual = r.norm() / bnorm;
  res.converged = res.relative_residual <= rtol;
  return res;
}

}  // namespace kgwave::detail
