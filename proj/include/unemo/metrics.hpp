#pragma once

#include "unemo/training.hpp"

namespace unemo {

struct EpisodeMetrics {
  double tl = 0;   // traveled length
  double ne = 0;   // final Euclidean distance to the goal
  int osr_flag = 0;  // some visited node was within threshold
  int sr_flag = 0;   // the final node was within threshold
  double spl = 0;    // success weighted by path length
};

struct MetricsReport {
  double threshold = 3.0;
  std::vector<EpisodeMetrics> rows;
  double tl = 0, ne = 0, osr = 0, sr = 0, spl = 0;  // means
};

// Navigation metrics per trajectory plus arithmetic-mean aggregates.
// SPL = SR * l / max(p, l) with l the start-goal geodesic and p the traveled
// length; a successful zero-length episode scores its SR flag.
MetricsReport compute_metrics(const std::vector<TrajectoryRecord>& trajs,
                              double threshold = 3.0);

struct PredictionStats {
  std::vector<double> cosines;  // zero-norm rows recorded as 0 and flagged
  std::vector<double> mses;
  std::vector<int> zero_norm;   // 1 where a cosine was undefined
  double mean_cosine = 0;
  double mean_mse = 0;
  int zero_norm_count = 0;
  std::vector<int> cosine_hist;  // 20 bins over [-1, 1]
  std::vector<int> mse_hist;     // 20 bins over [0, max mse]
  double mse_hist_max = 0;
};

// Per-pair cosine similarity and mean squared error with 20-bin histograms.
PredictionStats prediction_stats(const std::vector<Matrix>& preds,
                                 const std::vector<Matrix>& labels);

}  // namespace unemo
