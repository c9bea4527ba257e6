#include "photonlab/photon_sim.hpp"

#include <stdexcept>

namespace photonlab {

void CameraModel::validate() const {
  if (mean_photons < 0) throw std::invalid_argument("camera: mean_photons must be >= 0");
  if (quantum_efficiency < 0 || quantum_efficiency > 1)
    throw std::invalid_argument("camera: quantum_efficiency must be in [0,1]");
  if (dark_rate < 0) throw std::invalid_argument("camera: dark_rate must be >= 0");
  if (gain <= 0) throw std::invalid_argument("camera: gain must be > 0");
  if (sigma_read < 0) throw std::invalid_argument("camera: sigma_read must be >= 0");
}

CameraModel CameraModel::paper_like(double mean_photons) {
  CameraModel cam;
  cam.mean_photons = mean_photons;
  return cam;
}

std::vector<double> flux_map(const Image& img, double mu) {
  if (mu < 0) throw std::invalid_argument("flux_map: mu must be >= 0");
  double sum = 0.0;
  for (float v : img.pix) sum += v;
  std::vector<double> rates(img.size(), 0.0);
  if (sum <= 0.0) return rates;
  const double mean = sum / static_cast<double>(img.size());
  for (size_t i = 0; i < img.size(); ++i) rates[i] = mu * img.pix[i] / mean;
  return rates;
}

Frame simulate_frame(const Image& img, const CameraModel& cam, uint64_t stream_seed) {
  cam.validate();
  const std::vector<double> rates = flux_map(img, cam.mean_photons);
  Rng rng(stream_seed);
  Frame frame(img.height, img.width);
  for (size_t i = 0; i < rates.size(); ++i) {
    const int64_t detected = rng.poisson(rates[i]);
    const int64_t dark = cam.dark_rate > 0 ? rng.poisson(cam.dark_rate) : 0;
    double analog = cam.gain * static_cast<double>(detected + dark);
    if (cam.sigma_read > 0) analog += cam.sigma_read * rng.normal();
    frame.bits[i] = analog >= cam.threshold ? 1 : 0;
  }
  return frame;
}

CountMap accumulate_frames(const Image& img, const CameraModel& cam, int n_frames,
                           uint64_t master_seed) {
  if (n_frames < 1) throw std::invalid_argument("accumulate_frames: n_frames must be >= 1");
  CountMap acc(img.height, img.width);
  for (int k = 0; k < n_frames; ++k) {
    const Frame f = simulate_frame(img, cam, stream_seed(master_seed, static_cast<uint64_t>(k)));
    for (size_t i = 0; i < f.size(); ++i) acc.counts[i] += f.bits[i];
  }
  return acc;
}

}  // namespace photonlab
