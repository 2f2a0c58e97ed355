// SPDX-License-Identifier: Apache-2.0
#include "geoflow/snapshot.hpp"

#include "geoflow/errors.hpp"

#include <json.hpp>

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace geoflow {

static_assert(std::endian::native == std::endian::little,
              "snapshot payload assumes a little-endian host");

namespace {

using nlohmann::json;

// Components written per point, in order.
std::vector<Eigen::Index> payload_components(const TensorField& f) {
  std::vector<Eigen::Index> comps;
  if (f.symmetric()) {
    const int n = f.dim();
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) comps.push_back(f.index({i, j}));
    }
  } else {
    for (Eigen::Index c = 0; c < f.components(); ++c) comps.push_back(c);
  }
  return comps;
}

}  // namespace

void write_snapshot(std::ostream& os, const TensorField& field, double time) {
  field.require_finite("write_snapshot");
  const Grid& g = field.grid();
  json header;
  header["dim"] = g.dim();
  header["sizes"] = std::vector<int>(g.sizes().begin(), g.sizes().begin() + g.dim());
  header["periods"] =
      std::vector<double>(g.periods().begin(), g.periods().begin() + g.dim());
  header["scheme"] = to_string(g.scheme());
  header["rank"] = {field.contravariant(), field.covariant()};
  std::string slots;
  for (Variance v : field.slots()) slots += (v == Variance::Up ? 'u' : 'd');
  header["slots"] = slots;
  header["symmetric"] = field.symmetric();
  header["time"] = time;
  os << header.dump() << '\n';

  const auto comps = payload_components(field);
  std::vector<double> row(comps.size());
  for (Eigen::Index p = 0; p < field.points(); ++p) {
    for (std::size_t k = 0; k < comps.size(); ++k) row[k] = field.data()(p, comps[k]);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!os) throw Error("write_snapshot: stream failure");
}

Snapshot read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw UsageError("read_snapshot: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw UsageError(std::string("read_snapshot: bad header: ") + e.what());
  }
  const int dim = header.at("dim").get<int>();
  Grid grid(dim, header.at("sizes").get<std::vector<int>>(),
            header.at("periods").get<std::vector<double>>(),
            parse_scheme(header.value("scheme", std::string("spectral"))));
  std::vector<Variance> slots;
  for (char ch : header.at("slots").get<std::string>()) {
    if (ch != 'u' && ch != 'd') throw UsageError("read_snapshot: bad slot tag");
    slots.push_back(ch == 'u' ? Variance::Up : Variance::Down);
  }
  const bool symmetric = header.at("symmetric").get<bool>();
  Snapshot snap{TensorField(grid, slots,
                            symmetric ? Symmetry::Symmetric : Symmetry::None),
                header.at("time").get<double>()};
  TensorField& f = snap.field;
  const auto comps = payload_components(f);
  std::vector<double> row(comps.size());
  for (Eigen::Index p = 0; p < f.points(); ++p) {
    is.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!is) throw UsageError("read_snapshot: truncated payload");
    for (std::size_t k = 0; k < comps.size(); ++k) f.data()(p, comps[k]) = row[k];
  }
  if (symmetric) {
    const int n = f.dim();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) f.comp(f.index({j, i})) = f.comp(f.index({i, j}));
    }
  }
  f.require_finite("read_snapshot");
  return snap;
}

void write_snapshot(const std::filesystem::path& path, const TensorField& field,
                    double time) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot(os, field, time);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open " + path.string());
  return read_snapshot(is);
}

}  // namespace geoflow
