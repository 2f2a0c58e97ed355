// SPDX-License-Identifier: Apache-2.0
#include "geoflow/spectral.hpp"

#include "geoflow/errors.hpp"

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

namespace geoflow {

namespace {

// FFTW's planner is not reentrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

using LatticeKey = std::vector<double>;

LatticeKey key_of(const Grid& g) {
  LatticeKey k;
  for (int a = 0; a < g.dim(); ++a) {
    k.push_back(g.size(a));
    k.push_back(g.period(a));
  }
  return k;
}

}  // namespace

struct SpectralBasis::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

struct SpectralBasis::TableCache {
  std::mutex mutex;
  std::map<std::array<int, kMaxDim>, Eigen::ArrayXcd> tables;
};

std::shared_ptr<const SpectralBasis> SpectralBasis::of(const Grid& grid) {
  static std::mutex cache_mutex;
  static std::map<LatticeKey, std::shared_ptr<const SpectralBasis>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[key_of(grid)];
  if (!slot) slot = std::make_shared<SpectralBasis>(grid);
  return slot;
}

SpectralBasis::SpectralBasis(const Grid& grid)
    : grid_(grid.with_scheme(Scheme::Spectral)),
      plans_(std::make_unique<Plans>()),
      tables_(std::make_unique<TableCache>()) {
  const int d = grid_.dim();
  std::array<int, kMaxDim> half{};
  modes_ = 1;
  for (int a = 0; a < d; ++a) {
    half[a] = (a == d - 1) ? grid_.size(a) / 2 + 1 : grid_.size(a);
    modes_ *= half[a];
  }
  mode_.resize(modes_, d);
  k2_.setZero(modes_);
  for (Eigen::Index q = 0; q < modes_; ++q) {
    Eigen::Index r = q;
    for (int a = d - 1; a >= 0; --a) {
      int i = static_cast<int>(r % half[a]);
      r /= half[a];
      const int n = grid_.size(a);
      mode_(q, a) = (2 * i > n) ? i - n : i;
      const double k = grid_.wavenumber(a, mode_(q, a));
      k2_[q] += k * k;
    }
  }

  std::vector<int> dims(grid_.sizes().begin(), grid_.sizes().begin() + d);
  std::vector<double> real(grid_.points());
  std::vector<fftw_complex> spec(modes_);
  std::lock_guard lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->r2c = fftw_plan_dft_r2c(d, dims.data(), real.data(), spec.data(), flags);
  plans_->c2r = fftw_plan_dft_c2r(d, dims.data(), spec.data(), real.data(), flags);
  if (plans_->r2c == nullptr || plans_->c2r == nullptr) {
    throw Error("FFTW failed to create a plan");
  }
}

SpectralBasis::~SpectralBasis() {
  std::lock_guard lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

double SpectralBasis::wavenumber(Eigen::Index q, int axis) const {
  return grid_.wavenumber(axis, mode_(q, axis));
}

Eigen::ArrayXcd SpectralBasis::forward(const Eigen::Ref<const Eigen::ArrayXd>& f) const {
  if (f.size() != grid_.points()) {
    throw GridMismatchError("forward transform: size does not match grid");
  }
  Eigen::ArrayXd in = f;  // FFTW may not preserve alignment assumptions on Ref
  Eigen::ArrayXcd out(modes_);
  fftw_execute_dft_r2c(plans_->r2c, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  out /= static_cast<double>(grid_.points());
  return out;
}

Eigen::ArrayXd SpectralBasis::inverse(const Eigen::ArrayXcd& spectrum) const {
  if (spectrum.size() != modes_) {
    throw GridMismatchError("inverse transform: spectrum size does not match grid");
  }
  Eigen::ArrayXcd work = spectrum;  // c2r overwrites its input
  Eigen::ArrayXd out(grid_.points());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work.data()),
                       out.data());
  return out;
}

Eigen::ArrayXcd SpectralBasis::derivative_multiplier(std::span<const int> beta) const {
  const int d = grid_.dim();
  Eigen::ArrayXcd m(modes_);
  for (Eigen::Index q = 0; q < modes_; ++q) {
    std::complex<double> v = 1.0;
    for (int a = 0; a < d; ++a) {
      const int b = beta[a];
      if (b == 0) continue;
      if ((b % 2) == 1 && nyquist(q, a)) {
        v = 0.0;
        break;
      }
      const std::complex<double> ik(0.0, wavenumber(q, a));
      for (int r = 0; r < b; ++r) v *= ik;
    }
    m[q] = v;
  }
  return m;
}

const Eigen::ArrayXcd& SpectralBasis::derivative_table(
    const std::array<int, kMaxDim>& beta) const {
  std::lock_guard lock(tables_->mutex);
  auto it = tables_->tables.find(beta);
  if (it == tables_->tables.end()) {
    it = tables_->tables.emplace(beta, derivative_multiplier(beta)).first;
  }
  return it->second;
}

Eigen::ArrayXd multiplier_table(const SpectralBasis& basis, const Symbol& m) {
  const int d = basis.grid().dim();
  Eigen::ArrayXd table(basis.modes());
  std::array<double, kMaxDim> k{};
  std::array<double, kMaxDim> mk{};
  for (Eigen::Index q = 0; q < basis.modes(); ++q) {
    for (int a = 0; a < d; ++a) {
      k[a] = basis.wavenumber(q, a);
      mk[a] = -k[a];
    }
    table[q] = 0.5 * (m(std::span<const double>(k.data(), d)) +
                      m(std::span<const double>(mk.data(), d)));
  }
  return table;
}

TensorField fourier_multiplier(const TensorField& f, const Eigen::ArrayXd& table) {
  f.require_finite("fourier_multiplier");
  auto basis = SpectralBasis::of(f.grid());
  if (table.size() != basis->modes()) {
    throw GridMismatchError("fourier_multiplier: table does not match grid");
  }
  TensorField out = TensorField::zeros_like(f);
  for (Eigen::Index c = 0; c < f.components(); ++c) {
    const CanonicalComponent cc = f.canonical(c);
    if (cc.sign == 0) continue;
    if (cc.index != c) {
      out.comp(c) = cc.sign * out.comp(cc.index);
      continue;
    }
    out.comp(c) = basis->inverse(basis->forward(f.comp(c)) * table);
  }
  return out;
}

TensorField fourier_multiplier(const TensorField& f, const Symbol& m) {
  return fourier_multiplier(f, multiplier_table(*SpectralBasis::of(f.grid()), m));
}

}  // namespace geoflow
