#pragma once

#include <cstdint>
#include <string>

#include "photonlab/image.hpp"
#include "photonlab/rng.hpp"

namespace photonlab {

/// Forward-model parameters of the gated single-photon camera.
/// mean_photons is the mean detected photon rate per pixel per exposure
/// (post-efficiency); quantum_efficiency is kept for explicit thinning
/// studies on the incident rate.
struct CameraModel {
  double mean_photons = 1.6;
  double quantum_efficiency = 0.1;
  double dark_rate = 0.01;          // mean dark counts per pixel per exposure
  double gain = 1.0;                // analog counts per detected photon
  double sigma_read = 0.1;          // Gaussian read noise, analog counts
  double threshold = 0.5;           // binarization level, analog counts

  void validate() const;

  static CameraModel paper_like(double mean_photons = 1.6);
};

/// Per-pixel Poisson rates: lambda_ij = mu * img_ij / mean(img).
/// An all-zero image yields all-zero rates.
std::vector<double> flux_map(const Image& img, double mu);

/// One gated exposure: detected + dark Poisson counts, gain, Gaussian read
/// noise, then threshold binarization. Deterministic given stream_seed.
Frame simulate_frame(const Image& img, const CameraModel& cam, uint64_t stream_seed);

/// Sum of n_frames independent frames; frame k uses stream_seed(master_seed, k).
CountMap accumulate_frames(const Image& img, const CameraModel& cam, int n_frames,
                           uint64_t master_seed);

}  // namespace photonlab
