#include "peakcast/bundle.hpp"

#include <fstream>
#include <sstream>

namespace peakcast::bundle {

using json = nlohmann::ordered_json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::mlp_mse: return "mlp_mse";
    case ModelKind::lstm_mse: return "lstm_mse";
    case ModelKind::evt_head: return "evt_head";
    case ModelKind::fourier_ar: return "fourier_ar";
  }
  return "mlp_mse";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "mlp_mse") return ModelKind::mlp_mse;
  if (name == "lstm_mse") return ModelKind::lstm_mse;
  if (name == "evt_head") return ModelKind::evt_head;
  if (name == "fourier_ar") return ModelKind::fourier_ar;
  throw Error(ErrorKind::IncompatibleBundle, "unknown model_kind '" + std::string(name) + "'");
}

Network ModelBundle::network() const {
  switch (kind) {
    case ModelKind::mlp_mse: {
      nn::Mlp mlp(layers);
      mlp.set_params(weights);
      return mlp;
    }
    case ModelKind::evt_head: {
      nn::Mlp mlp(layers);
      mlp.set_params(weights);
      nn::EvtHead head(std::move(mlp));
      head.set_excess_scale(excess_scale);
      return head;
    }
    case ModelKind::lstm_mse: {
      nn::LstmRegressor lstm(1, lstm_hidden);
      lstm.set_params(weights);
      return lstm;
    }
    case ModelKind::fourier_ar: break;
  }
  throw Error(ErrorKind::IncompatibleBundle, "fourier_ar bundle has no network");
}

void ModelBundle::set_network(const Network& net) {
  if (const auto* head = std::get_if<nn::EvtHead>(&net)) {
    kind = ModelKind::evt_head;
    layers = head->backbone().shapes();
    excess_scale = head->excess_scale();
  } else if (const auto* lstm = std::get_if<nn::LstmRegressor>(&net)) {
    kind = ModelKind::lstm_mse;
    lstm_hidden = lstm->cell().hidden_size();
  } else {
    kind = ModelKind::mlp_mse;
    layers = std::get<nn::Mlp>(net).shapes();
  }
  const auto p = parameters(net);
  weights.assign(p.begin(), p.end());
}

json to_json(const ModelBundle& b) {
  json j;
  j["schema_version"] = b.schema_version;
  j["model_kind"] = std::string(to_string(b.kind));
  json arch;
  arch["lags"] = b.lags;
  arch["horizon"] = b.horizon;
  if (b.kind == ModelKind::mlp_mse || b.kind == ModelKind::evt_head) {
    json layers = json::array();
    for (const auto& s : b.layers) {
      layers.push_back(json{{"in", s.in}, {"out", s.out}, {"activation", std::string(nn::to_string(s.activation))}});
    }
    arch["layers"] = layers;
  }
  if (b.kind == ModelKind::lstm_mse) {
    arch["lstm_input"] = 1;
    arch["lstm_hidden"] = b.lstm_hidden;
  }
  if (b.kind == ModelKind::evt_head) arch["excess_scale"] = b.excess_scale;
  if (b.kind == ModelKind::fourier_ar) {
    json blocks = json::array();
    for (const auto& s : b.fourier.seasonal) blocks.push_back(json{{"K", s.K}, {"m", s.m}});
    arch["seasonal"] = blocks;
  }
  j["architecture"] = arch;
  if (b.kind == ModelKind::fourier_ar) {
    j["weights"] = json{{"intercept", b.fourier.intercept},
                        {"fourier", b.fourier.fourier},
                        {"exog", b.fourier.exog},
                        {"ar", json::array({b.fourier.phi1, b.fourier.phi2})},
                        {"resid_variance", b.fourier.resid_variance}};
  } else {
    j["weights"] = b.weights;
  }
  j["normalizer"] = json{{"mean", b.normalizer.mean}, {"std", b.normalizer.std}};
  j["threshold"] = b.threshold ? json(*b.threshold) : json(nullptr);
  j["seed"] = b.seed;
  j["config"] = b.config;
  return j;
}

ModelBundle from_json(const json& j) {
  try {
    ModelBundle b;
    b.schema_version = j.at("schema_version").get<int>();
    if (b.schema_version != kSchemaVersion) {
      throw Error(ErrorKind::IncompatibleBundle, "schema_version " + std::to_string(b.schema_version) +
                                                     " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    b.kind = model_kind_from_string(j.at("model_kind").get<std::string>());
    const auto& arch = j.at("architecture");
    b.lags = arch.at("lags").get<std::size_t>();
    b.horizon = arch.at("horizon").get<std::size_t>();
    if (arch.contains("layers")) {
      for (const auto& l : arch.at("layers")) {
        b.layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                            nn::activation_from_string(l.at("activation").get<std::string>())});
      }
    }
    if (b.kind == ModelKind::lstm_mse) b.lstm_hidden = arch.at("lstm_hidden").get<std::size_t>();
    if (b.kind == ModelKind::evt_head) b.excess_scale = arch.at("excess_scale").get<double>();
    if (b.kind == ModelKind::fourier_ar) {
      for (const auto& s : arch.at("seasonal")) b.fourier.seasonal.push_back({s.at("K").get<std::size_t>(), s.at("m").get<std::size_t>()});
      const auto& w = j.at("weights");
      b.fourier.intercept = w.at("intercept").get<double>();
      b.fourier.fourier = w.at("fourier").get<std::vector<double>>();
      b.fourier.exog = w.at("exog").get<std::vector<double>>();
      const auto ar = w.at("ar").get<std::vector<double>>();
      if (ar.size() != 2) throw Error(ErrorKind::IncompatibleBundle, "ar must hold two coefficients");
      b.fourier.phi1 = ar[0];
      b.fourier.phi2 = ar[1];
      b.fourier.resid_variance = w.at("resid_variance").get<double>();
    } else {
      b.weights = j.at("weights").get<std::vector<double>>();
    }
    b.normalizer.mean = j.at("normalizer").at("mean").get<double>();
    b.normalizer.std = j.at("normalizer").at("std").get<double>();
    if (!j.at("threshold").is_null()) b.threshold = j.at("threshold").get<double>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.config = j.at("config");
    if (b.is_network()) (void)b.network();  // validates weight count against the architecture
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IncompatibleBundle, e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IncompatibleBundle) throw;
    throw Error(ErrorKind::IncompatibleBundle, e.what());
  }
}

std::string serialize(const ModelBundle& b) { return to_json(b).dump(2) + "\n"; }

ModelBundle deserialize(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IncompatibleBundle, e.what());
  }
  return from_json(j);
}

void save(const ModelBundle& b, const std::filesystem::path& path) { data::write_file_atomic(path, serialize(b)); }

ModelBundle load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return deserialize(s.str());
}

}  // namespace peakcast::bundle
