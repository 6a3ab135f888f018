#pragma once

// Serialized models. A bundle carries everything needed to rebuild the
// forward pass: architecture, flat weights, input normalization and, for the
// EVT head, the threshold. JSON with a fixed key order; doubles are written in
// shortest round-trip form, so save(load(x)) reproduces x byte-for-byte.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "peakcast/baseline.hpp"
#include "peakcast/data.hpp"
#include "peakcast/model.hpp"

namespace peakcast::bundle {

inline constexpr int kSchemaVersion = 1;

enum class ModelKind { mlp_mse, lstm_mse, evt_head, fourier_ar };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ModelBundle {
  int schema_version = kSchemaVersion;
  ModelKind kind = ModelKind::mlp_mse;
  std::size_t lags = 24;
  std::size_t horizon = 5;
  std::vector<nn::LayerShape> layers;  // mlp_mse and evt_head
  std::size_t lstm_hidden = 0;         // lstm_mse
  double excess_scale = 1.0;           // evt_head
  std::vector<double> weights;
  data::Normalizer normalizer;
  std::optional<double> threshold;
  baseline::FourierArModel fourier;  // fourier_ar
  std::uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  bool is_network() const { return kind != ModelKind::fourier_ar; }
  /// Rebuilds the network with the stored weights. Throws IncompatibleBundle for fourier_ar.
  Network network() const;
  void set_network(const Network& net);
};

nlohmann::ordered_json to_json(const ModelBundle& b);
ModelBundle from_json(const nlohmann::ordered_json& j);

std::string serialize(const ModelBundle& b);
ModelBundle deserialize(std::string_view text);

void save(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load(const std::filesystem::path& path);

}  // namespace peakcast::bundle
