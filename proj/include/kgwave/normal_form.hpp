#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "detail/format.hpp"
#include "errors.hpp"
#include "fourier_space.hpp"
#include "nonlinearity.hpp"
#include "trajectory.hpp"
#include "wequation.hpp"

namespace kgwave {

struct NormalFormOptions {
  int nx = 24;            // spatial band of the corrections
  int nt = 64;            // temporal band of the corrections
  double low_pass = 0.5;  // keep harmonics with eps^2 (2 pi j/p)^2 <= low_pass * (k^2 - 1/omega^2)
  SobolevIndex s = 1.0;   // norm used for the drive history
};

// Sequence of averaging shifts w -> w + c_k with c_k = eps^2 J_eps^{-1} (low-passed drive).
// The drive after k steps is D_k = F(V, -S_k)/eps^2 with S_k = c_0 + ... + c_{k-1},
// i.e. the new inhomogeneity of the w-equation written in the shifted variable.
class TransformedSystem {
 public:
  TransformedSystem(const Trajectory& V, double eps, AnalyticOddNonlinearity model, NormalFormOptions opt = {})
      : V_(V), eps_(eps), model_(std::move(model)), opt_(opt), offset_(V.period(), opt.nx, opt.nt) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
    if (opt.nx < 2 || opt.nt < 0) throw DomainError("normal-form bands must satisfy nx >= 2, nt >= 0");
    if (V.band() > opt.nt)
      throw AliasingError("trajectory band " + std::to_string(V.band()) + " exceeds the normal-form tau band " +
                          std::to_string(opt.nt));
    drive_ = drive_at(offset_);
    history_.push_back(norm_s(drive_, opt_.s));
  }

  int step() const { return int(stack_.size()); }
  double eps() const { return eps_; }
  double period() const { return V_.period(); }
  const Trajectory& trajectory() const { return V_; }
  const AnalyticOddNonlinearity& model() const { return model_; }
  const NormalFormOptions& options() const { return opt_; }
  const std::vector<SpaceTimeField>& correction_stack() const { return stack_; }
  const std::vector<double>& drive_norm_history() const { return history_; }
  const SpaceTimeField& drive() const { return drive_; }
  const SpaceTimeField& offset() const { return offset_; }  // S_k
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool stopped_early() const { return stopped_early_; }
  double rejected_ratio() const { return rejected_ratio_; }

  double terminal_drive_norm() const { return history_.back(); }

  // Original inhomogeneity g~(V, w) on the normal-form bands.
  SpaceTimeField original_nonlinearity(const SpaceTimeField& w) const {
    return StageProblem(V_, eps_, model_, opt_.nx, opt_.nt).g_field(w);
  }

  // Nonlinearity of the shifted equation, unwound through the stack one correction at a time:
  // G_{i+1}(y) = G_i(y - c_i) + c_i'' - J c_i / eps^2.
  SpaceTimeField transformed_nonlinearity(const SpaceTimeField& y) const {
    SpaceTimeField arg = y, acc(period(), opt_.nx, opt_.nt);
    for (int i = step() - 1; i >= 0; --i) {
      acc = acc + d_tautau(stack_[i]) - (1.0 / (eps_ * eps_)) * apply_J_eps(stack_[i], eps_);
      arg = arg - stack_[i];
    }
    return original_nonlinearity(arg) + acc;
  }

  // Residual -y'' + J y / eps^2 + G(y) of the shifted equation.
  SpaceTimeField transformed_residual(const SpaceTimeField& y) const {
    return (-1.0) * d_tautau(y) + (1.0 / (eps_ * eps_)) * apply_J_eps(y, eps_) + transformed_nonlinearity(y);
  }

  // Residual of the unshifted equation at w.
  SpaceTimeField original_residual(const SpaceTimeField& w) const {
    return (-1.0) * d_tautau(w) + (1.0 / (eps_ * eps_)) * apply_J_eps(w, eps_) + original_nonlinearity(w);
  }

  void write_history_csv(std::ostream& os, bool header = true) const {
    if (header) os << "k,eps,drive_norm\n";
    for (std::size_t k = 0; k < history_.size(); ++k)
      os << k << ',' << detail::shortest(eps_) << ',' << detail::shortest(history_[k]) << '\n';
  }

  friend TransformedSystem nf_step(const TransformedSystem& sys);
  friend TransformedSystem nf_sequence(const Trajectory&, double, const AnalyticOddNonlinearity&, int,
                                       NormalFormOptions);

 private:
  SpaceTimeField drive_at(const SpaceTimeField& S) const {
    StageProblem sp(V_, eps_, model_, opt_.nx, opt_.nt, &S);
    return (1.0 / (eps_ * eps_)) * sp.residual(SpaceTimeField(period(), opt_.nx, opt_.nt));
  }

  SpaceTimeField next_correction() const {
    SpaceTimeField c(period(), opt_.nx, opt_.nt);
    const double om2 = 1.0 + eps_ * eps_, wt = kTwoPi / period();
    for (int k = 2; k <= opt_.nx; ++k) {
      double gap = double(k) * k - 1.0 / om2;
      for (int j = 0; j <= opt_.nt; ++j) {
        double fast = eps_ * eps_ * (wt * j) * (wt * j);
        if (fast <= opt_.low_pass * gap) c(j, k) = eps_ * eps_ * drive_(j, k) / j_eps_symbol(k, eps_);
      }
    }
    return c;
  }

  Trajectory V_;
  double eps_;
  AnalyticOddNonlinearity model_;
  NormalFormOptions opt_;
  std::vector<SpaceTimeField> stack_;
  std::vector<double> history_;
  SpaceTimeField drive_;
  SpaceTimeField offset_;
  std::vector<std::string> warnings_;
  bool stopped_early_ = false;
  double rejected_ratio_ = 0.0;
};

inline TransformedSystem nf_step(const TransformedSystem& sys) {
  TransformedSystem next = sys;
  SpaceTimeField c = sys.next_correction();
  next.offset_ = sys.offset_ + c;
  next.stack_.push_back(c);
  next.drive_ = next.drive_at(next.offset_);
  double prev = sys.history_.back(), now = norm_s(next.drive_, sys.opt_.s);
  next.history_.push_back(now);
  if (prev > 0.0 && now >= prev)
    next.warnings_.push_back("drive norm did not contract at step " + std::to_string(next.step()) +
                             ": measured ratio " + detail::shortest(now / prev));
  return next;
}

inline TransformedSystem nf_step(const TransformedSystem& sys, const Trajectory& V, double eps) {
  if (eps != sys.eps() || V.period() != sys.period() || V.coeffs().size() != sys.trajectory().coeffs().size() ||
      V.coeffs() != sys.trajectory().coeffs())
    throw ShapeError("nf_step: trajectory or epsilon differs from the system's");
  return nf_step(sys);
}

// Steps until k_max or until the drive norm stops decreasing; a non-contracting step is discarded.
inline TransformedSystem nf_sequence(const Trajectory& V, double eps, const AnalyticOddNonlinearity& model, int k_max,
                                     NormalFormOptions opt = {}) {
  if (k_max < 0) throw DomainError("k_max must be >= 0");
  TransformedSystem sys(V, eps, model, opt);
  for (int i = 0; i < k_max; ++i) {
    if (sys.history_.back() == 0.0) break;
    TransformedSystem next = nf_step(sys);
    double ratio = next.history_.back() / sys.history_.back();
    if (ratio >= 1.0) {
      sys.stopped_early_ = true;
      sys.rejected_ratio_ = ratio;
      sys.warnings_.push_back("stopped after step " + std::to_string(sys.step()) + ": measured ratio " +
                              detail::shortest(ratio));
      break;
    }
    sys = std::move(next);
  }
  return sys;
}

// min(8, floor(c_emp / eps)).
inline int default_nf_steps(double eps, double c_emp) { return std::min(8, int(std::floor(c_emp / eps))); }

}  // namespace kgwave
