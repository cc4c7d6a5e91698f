// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <string>

#include "inrrom/errors.hpp"
#include "inrrom/io.hpp"
#include "json.hpp"

namespace inrrom {

namespace {

// Degree-6 polynomial fit of the viridis colormap, one row per channel.
constexpr double kViridis[3][7] = {
    {0.2777273272234177, 0.1050930431085774, -0.3308618287255563, -4.634230498983486, 6.228269936347081,
     4.776384997670288, -5.435455855934631},
    {0.005407344544966578, 1.404613529898575, 0.214847559468213, -5.799100973351585, 14.17993336680509,
     -13.74514537774601, 4.645852612178535},
    {0.3340998053353061, 1.384590162594685, 0.09509516302823659, -19.33244095627987, 56.69055260068105,
     -65.35303263337234, 26.3124352495832},
};

}  // namespace

std::array<std::uint8_t, 3> colormap(std::uint8_t index) {
  const double t = double(index) / 255.0;
  std::array<std::uint8_t, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) {
    double v = 0.0;
    for (int d = 6; d >= 0; --d) v = v * t + kViridis[ch][d];
    rgb[ch] = std::uint8_t(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  }
  return rgb;
}

HeatmapInfo write_heatmap(std::span<const double> field, std::size_t nx, std::size_t ny,
                          const std::filesystem::path& path, double mu, double t) {
  if (nx == 0 || ny == 0 || field.size() != nx * ny) {
    throw ContractError("write_heatmap: field has " + std::to_string(field.size()) + " values for a " +
                        std::to_string(nx) + "x" + std::to_string(ny) + " image");
  }
  for (double v : field) {
    if (!std::isfinite(v)) throw ContractError("write_heatmap: non-finite field value");
  }
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  HeatmapInfo info{*lo, *hi, mu, t};
  const double span = info.max - info.min;

  const std::string head = "P6\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n255\n";
  std::vector<std::uint8_t> bytes(head.begin(), head.end());
  bytes.reserve(bytes.size() + 3 * nx * ny);
  for (std::size_t img_row = 0; img_row < ny; ++img_row) {
    const std::size_t row = ny - 1 - img_row;
    for (std::size_t col = 0; col < nx; ++col) {
      const double v = field[row * nx + col];
      const double s = span > 0.0 ? (v - info.min) / span : 0.0;
      const auto rgb = colormap(std::uint8_t(std::lround(255.0 * std::clamp(s, 0.0, 1.0))));
      bytes.insert(bytes.end(), rgb.begin(), rgb.end());
    }
  }
  write_file(path, bytes);

  const nlohmann::json side = {{"min", info.min}, {"max", info.max}, {"mu", mu}, {"t", t},
                               {"width", nx},     {"height", ny}};
  std::filesystem::path json_path = path;
  json_path += ".json";
  write_text(json_path, side.dump(2) + "\n");
  return info;
}

}  // namespace inrrom
