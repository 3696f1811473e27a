#include "unemo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unemo {

MetricsReport compute_metrics(const std::vector<TrajectoryRecord>& trajs,
                              double threshold) {
  if (threshold <= 0) throw DomainError("metrics threshold must be positive");
  MetricsReport rep;
  rep.threshold = threshold;
  for (const TrajectoryRecord& traj : trajs) {
    if (!traj.world || traj.visited.empty())
      throw ContractError("metrics over an empty trajectory");
    const World& w = *traj.world;
    const Eigen::Vector2d goal = w.position(traj.episode.goal);
    EpisodeMetrics m;
    m.tl = traj.traveled;
    m.ne = (w.position(traj.visited.back()) - goal).norm();
    m.sr_flag = m.ne <= threshold ? 1 : 0;
    for (int node : traj.visited)
      if ((w.position(node) - goal).norm() <= threshold) {
        m.osr_flag = 1;
        break;
      }
    const double l =
        shortest_path(w, traj.episode.start, traj.episode.goal).second;
    if (m.sr_flag)
      m.spl = m.tl == 0.0 ? 1.0 : l / std::max(m.tl, l);
    rep.rows.push_back(m);
  }
  if (!rep.rows.empty()) {
    // sum first, divide once: uniform flags then average to exactly 0 or 1
    const double n = static_cast<double>(rep.rows.size());
    for (const EpisodeMetrics& m : rep.rows) {
      rep.tl += m.tl;
      rep.ne += m.ne;
      rep.osr += m.osr_flag;
      rep.sr += m.sr_flag;
      rep.spl += m.spl;
    }
    rep.tl /= n;
    rep.ne /= n;
    rep.osr /= n;
    rep.sr /= n;
    rep.spl /= n;
  }
  return rep;
}

PredictionStats prediction_stats(const std::vector<Matrix>& preds,
                                 const std::vector<Matrix>& labels) {
  if (preds.size() != labels.size())
    throw DimensionError("prediction/label count mismatch: " +
                         std::to_string(preds.size()) + " vs " +
                         std::to_string(labels.size()));
  PredictionStats st;
  double cos_sum = 0;
  int cos_count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Matrix& a = preds[i];
    const Matrix& b = labels[i];
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw DimensionError("prediction/label shape mismatch at row " +
                           std::to_string(i));
    const double mse = (a - b).squaredNorm() / a.size();
    if (!std::isfinite(mse)) throw DomainError("non-finite prediction entry");
    st.mses.push_back(mse);
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      st.cosines.push_back(0.0);
      st.zero_norm.push_back(1);
      ++st.zero_norm_count;
    } else {
      const double c = a.cwiseProduct(b).sum() / (na * nb);
      st.cosines.push_back(c);
      st.zero_norm.push_back(0);
      cos_sum += c;
      ++cos_count;
    }
  }
  st.mean_cosine = cos_count ? cos_sum / cos_count : 0.0;
  st.mean_mse = st.mses.empty()
                    ? 0.0
                    : std::accumulate(st.mses.begin(), st.mses.end(), 0.0) /
                          st.mses.size();

  st.cosine_hist.assign(20, 0);
  for (std::size_t i = 0; i < st.cosines.size(); ++i) {
    if (st.zero_norm[i]) continue;
    int bin = static_cast<int>((st.cosines[i] + 1.0) / 2.0 * 20.0);
    st.cosine_hist[std::clamp(bin, 0, 19)] += 1;
  }
  st.mse_hist.assign(20, 0);
  st.mse_hist_max =
      st.mses.empty() ? 0.0 : *std::max_element(st.mses.begin(), st.mses.end());
  for (double m : st.mses) {
    int bin = st.mse_hist_max == 0.0
                  ? 0
                  : static_cast<int>(m / st.mse_hist_max * 20.0);
    st.mse_hist[std::clamp(bin, 0, 19)] += 1;
  }
  return st;
}

}  // namespace unemo
