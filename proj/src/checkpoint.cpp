#include <fstream>

#include <json.hpp>

#include "compatkit/toymodel.hpp"

namespace compatkit::toy {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "compatkit-toy-checkpoint";
constexpr int kFormatVersion = 1;

json tensor_json(const Tensor2& t) {
  return {{"rows", t.rows()}, {"cols", t.cols()}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor2 tensor_from(const json& j) {
  return Tensor2(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("values").get<std::vector<double>>());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TaskModel& model) {
  json j;
  j["format"] = kFormat;
  j["format_version"] = kFormatVersion;
  const auto& base = *model.base;
  j["version_tag"] = base.version_tag;
  j["dims"] = {{"vocab", base.dims.vocab}, {"context", base.dims.context}, {"hidden", base.dims.hidden}};
  json weights = json::object();
  for (const auto& [name, w] : base.weights) weights[name] = tensor_json(w);
  j["weights"] = std::move(weights);
  json layers = json::object();
  for (const auto& [name, pair] : model.adapter.layers) layers[name] = {{"A", tensor_json(pair.a)}, {"B", tensor_json(pair.b)}};
  j["adapter"] = {{"rank", model.adapter.rank}, {"alpha", model.adapter.alpha}, {"layers", std::move(layers)}};

  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << j.dump() << '\n';
}

TaskModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kFormat || j.at("format_version").get<int>() != kFormatVersion) {
      throw Error("'" + path.string() + "' is not a version " + std::to_string(kFormatVersion) + " checkpoint");
    }
    auto base = std::make_shared<BaseModel>();
    base->version_tag = j.at("version_tag").get<std::string>();
    const auto& dims = j.at("dims");
    base->dims = {dims.at("vocab").get<std::size_t>(), dims.at("context").get<std::size_t>(),
                  dims.at("hidden").get<std::size_t>()};
    for (const auto& [name, w] : j.at("weights").items()) base->weights[name] = tensor_from(w);
    base->check_consistent();

    TaskModel model;
    const auto& adapter = j.at("adapter");
    model.adapter.rank = adapter.at("rank").get<std::size_t>();
    model.adapter.alpha = adapter.at("alpha").get<double>();
    for (const auto& [name, pair] : adapter.at("layers").items()) {
      LoraPair lp{tensor_from(pair.at("A")), tensor_from(pair.at("B"))};
      const auto& w = base->weight(name);
      if (lp.a.rows() != w.rows() || lp.b.cols() != w.cols() || lp.a.cols() != model.adapter.rank ||
          lp.b.rows() != model.adapter.rank) {
        throw ShapeError("adapter for '" + name + "' does not match its base weight");
      }
      model.adapter.layers[name] = std::move(lp);
    }
    model.base = std::move(base);
    return model;
  } catch (const json::exception& e) {
    throw Error("malformed checkpoint '" + path.string() + "': " + e.what());
  }
}

}  // namespace compatkit::toy
