#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "unicon/trajectory.hpp"

namespace unicon {

struct StepwiseMse {
  std::vector<double> per_element;
  double aggregate = 0.0;
};

// Step-wise comparison for exactly replayed rollouts: per element, the mean
// over frames of the squared difference.
inline StepwiseMse stepwise_mse(const Trajectory& t, const Trajectory& t_hat,
                                const std::string& label) {
  int ia = t.label_index(label), ib = t_hat.label_index(label);
  if (ia < 0 || ib < 0) throw UnknownLabel(label);
  if (t.frames.size() != t_hat.frames.size())
    throw LengthMismatch(label, t.frames.size(), t_hat.frames.size());
  const LabelSchema& la = t.labels[static_cast<std::size_t>(ia)];
  const LabelSchema& lb = t_hat.labels[static_cast<std::size_t>(ib)];
  if (la.dtype != lb.dtype || la.dims != lb.dims)
    throw SchemaMismatch("label '" + label + "' has different schemas");

  const std::size_t n = t.frames.size();
  const std::size_t dim = la.elem_count();
  StepwiseMse out;
  out.per_element.assign(dim, 0.0);
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = t.values_f64(i, static_cast<std::size_t>(ia));
    auto b = t_hat.values_f64(i, static_cast<std::size_t>(ib));
    for (std::size_t e = 0; e < dim; ++e) {
      double d = a[e] - b[e];
      out.per_element[e] += d * d;
    }
  }
  for (double& v : out.per_element) v /= static_cast<double>(n);
  for (double v : out.per_element) out.aggregate += v;
  out.aggregate /= static_cast<double>(dim);
  return out;
}

struct UnfoldedLoss {
  double loss = 0.0;          // term_forward + term_backward
  double term_forward = 0.0;  // minimized forward term (shifts the reference)
  double term_backward = 0.0; // minimized backward term (shifts the candidate)
  std::size_t j_forward = 0;
  std::size_t j_backward = 0;
};

namespace detail {

// Mean per-frame L2 distance between a[i+j] and b[i] over the valid overlap,
// normalized by the overlap length so terms stay comparable across shifts.
inline double shifted_term(const Trajectory& a, std::size_t la, const Trajectory& b,
                           std::size_t lb, std::size_t j, bool squared) {
  const std::size_t overlap = std::min(a.frames.size() - j, b.frames.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < overlap; ++i) {
    auto va = a.values_f64(i + j, la);
    auto vb = b.values_f64(i, lb);
    double s2 = 0.0;
    for (std::size_t e = 0; e < va.size(); ++e) {
      double d = va[e] - vb[e];
      s2 += d * d;
    }
    sum += squared ? s2 : std::sqrt(s2);
  }
  return overlap ? sum / static_cast<double>(overlap) : 0.0;
}

}  // namespace detail

// Shift-tolerant two-sided loss for closed-loop rollouts: each term minimizes
// the mean per-frame L2 distance over non-negative shifts of one trajectory;
// the two terms together cover both lag signs. `squared` swaps the per-frame
// L2 norm for its square.
inline UnfoldedLoss unfolded_loss(const Trajectory& t, const Trajectory& t_hat,
                                  const std::string& label, std::size_t max_shift,
                                  bool squared = false) {
  int ia = t.label_index(label), ib = t_hat.label_index(label);
  if (ia < 0 || ib < 0) throw UnknownLabel(label);
  const std::size_t na = t.frames.size(), nb = t_hat.frames.size();
  if (na == 0 || nb == 0) throw LengthMismatch(label, 1, 0);
  if (max_shift >= std::min(na, nb)) throw WindowTooLarge(max_shift, std::min(na, nb));

  const auto la = static_cast<std::size_t>(ia), lb = static_cast<std::size_t>(ib);
  UnfoldedLoss out;
  double best_fwd = 0.0, best_bwd = 0.0;
  for (std::size_t j = 0; j <= max_shift; ++j) {
    double fwd = detail::shifted_term(t, la, t_hat, lb, j, squared);
    double bwd = detail::shifted_term(t_hat, lb, t, la, j, squared);
    if (j == 0 || fwd < best_fwd) { best_fwd = fwd; out.j_forward = j; }
    if (j == 0 || bwd < best_bwd) { best_bwd = bwd; out.j_backward = j; }
  }
  out.term_forward = best_fwd;
  out.term_backward = best_bwd;
  out.loss = best_fwd + best_bwd;
  return out;
}

inline std::size_t default_max_shift(std::size_t n) {
  return std::min<std::size_t>(n / 4, 50);
}

struct LabelGap {
  StepwiseMse stepwise;
  UnfoldedLoss unfolded;
  // abs_error[frame][element] = |T - T_hat| over the compared prefix
  std::vector<std::vector<double>> abs_error;
};

struct GapReport {
  std::map<std::string, LabelGap> per_label;
  std::size_t n_frames_compared = 0;
};

// Full comparison over the common label subset. Frame counts may differ; the
// stepwise comparison and error series run over the shared prefix, the
// unfolded loss over the full trajectories.
inline GapReport analyze(const Trajectory& t, const Trajectory& t_hat, std::size_t max_shift,
                         bool squared = false) {
  std::vector<std::string> common;
  for (const auto& l : t.labels)
    if (t_hat.label_index(l.label) >= 0) common.push_back(l.label);
  if (common.empty()) throw NoCommonLabels();

  const std::size_t n = std::min(t.frames.size(), t_hat.frames.size());
  GapReport report;
  report.n_frames_compared = n;

  Trajectory ta = t, tb = t_hat;
  ta.frames.resize(n);
  tb.frames.resize(n);

  for (const auto& label : common) {
    LabelGap gap;
    gap.stepwise = stepwise_mse(ta, tb, label);
    std::size_t j = std::min(max_shift, n > 0 ? n - 1 : 0);
    if (n > 0) gap.unfolded = unfolded_loss(t, t_hat, label, j, squared);

    auto la = static_cast<std::size_t>(ta.label_index(label));
    auto lb = static_cast<std::size_t>(tb.label_index(label));
    gap.abs_error.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto a = ta.values_f64(i, la);
      auto b = tb.values_f64(i, lb);
      std::vector<double> e(a.size());
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = std::abs(a[k] - b[k]);
      gap.abs_error.push_back(std::move(e));
    }
    report.per_label.emplace(label, std::move(gap));
  }
  return report;
}

inline std::string format_gap_report(const GapReport& r) {
  std::ostringstream os;
  os << "frames compared: " << r.n_frames_compared << "\n";
  for (const auto& [label, gap] : r.per_label) {
    os << "label " << label << "\n";
    os << "  stepwise mse (aggregate): " << std::scientific << std::setprecision(6)
       << gap.stepwise.aggregate << "\n";
    os << "  stepwise mse per element:";
    for (double v : gap.stepwise.per_element) os << ' ' << v;
    os << "\n";
    os << "  unfolded loss: " << gap.unfolded.loss << " (j_forward=" << gap.unfolded.j_forward
       << ", j_backward=" << gap.unfolded.j_backward << ")\n";
  }
  return os.str();
}

// One CSV per label element: "<label>.e<k>.csv" with rows "tick,abs_error".
inline void write_gap_csv(const GapReport& r, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [label, gap] : r.per_label) {
    const std::size_t dim = gap.abs_error.empty() ? 0 : gap.abs_error[0].size();
    for (std::size_t e = 0; e < dim; ++e) {
      std::ofstream os(out_dir + "/" + label + ".e" + std::to_string(e) + ".csv");
      if (!os) throw IoFailure("cannot write gap csv in '" + out_dir + "'");
      os << "tick,abs_error\n";
      for (std::size_t i = 0; i < gap.abs_error.size(); ++i)
        os << i << ',' << std::setprecision(17) << gap.abs_error[i][e] << '\n';
    }
  }
}

}  // namespace unicon
