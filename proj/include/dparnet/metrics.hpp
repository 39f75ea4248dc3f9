#ifndef DPARNET_METRICS_HPP
#define DPARNET_METRICS_HPP

#include "dparnet/image.hpp"

namespace dparnet {

// 10*log10(1/MSE) over all pixels/channels, peak 1.0; exact matches are
// capped at 99 dB so reports stay finite.
double psnr(const Frame& pred, const Frame& gt);
constexpr double kPsnrCap = 99.0;

// Windowed SSIM: 11x11 Gaussian window std 1.5, K1=0.01, K2=0.03, dynamic
// range 1.0, mean over fully interior windows, channels averaged.
double ssim(const Frame& pred, const Frame& gt);

// RMSE divided by the ground-truth value range (1.0 for constant gt).
double nrmse(const Frame& pred, const Frame& gt);

// Variation of information between 256-level quantizations, natural log;
// pixels and channels are the clustered elements.
double vi(const Frame& pred, const Frame& gt);

// Stacks column `column_index` of every frame into a T x H image.
Frame temporal_profile(const Sequence& seq, int column_index);

// mean absolute difference between consecutive rows; the Fig.-4-style
// stability score of a profile
double profile_instability(const Frame& profile);

}  // namespace dparnet

#endif
