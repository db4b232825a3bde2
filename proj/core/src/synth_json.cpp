#include <json.hpp>

#include "ipca/synth.hpp"

namespace ipca::synth {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw InvalidConfig("unknown key '" + item.key() + "' in " + where);
    }
  }
}

OperatorKind operator_kind_from_string(const std::string& name) {
  if (name == "identity") return OperatorKind::Identity;
  if (name == "gaussian") return OperatorKind::Gaussian;
  if (name == "smoothing") return OperatorKind::Smoothing;
  throw InvalidConfig("unknown operator kind '" + name + "'");
}

std::string operator_kind_to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::Gaussian: return "gaussian";
    case OperatorKind::Smoothing: return "smoothing";
  }
  return "smoothing";
}

}  // namespace

SynthSpec synth_spec_from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ParseError(std::string("synth spec: ") + err.what());
  }
  if (!root.is_object()) throw InvalidConfig("synth spec must be a JSON object");
  reject_unknown_keys(root,
                      {"kind", "mesh", "channels", "n_components", "sigmas",
                       "sample_count", "noise_sigma", "operator", "sensor_align",
                       "seed"},
                      "synth spec");

  SynthSpec spec;
  try {
    if (root.contains("kind")) spec.kind = root["kind"].get<std::string>();
    if (root.contains("mesh")) {
      const json& mesh = root["mesh"];
      reject_unknown_keys(mesh, {"kind", "subdivisions", "radius", "path", "format"},
                          "mesh");
      if (mesh.contains("kind")) spec.mesh.kind = mesh["kind"].get<std::string>();
      if (mesh.contains("subdivisions")) {
        spec.mesh.subdivisions = mesh["subdivisions"].get<int>();
      }
      if (mesh.contains("radius")) spec.mesh.radius = mesh["radius"].get<double>();
      if (mesh.contains("path")) spec.mesh.path = mesh["path"].get<std::string>();
      if (mesh.contains("format")) spec.mesh.format = mesh["format"].get<std::string>();
    }
    if (root.contains("channels")) spec.channels = root["channels"].get<int>();
    if (root.contains("n_components")) {
      spec.n_components = root["n_components"].get<int>();
    }
    if (root.contains("sigmas")) {
      spec.sigmas = root["sigmas"].get<std::vector<double>>();
    }
    if (root.contains("sample_count")) {
      spec.sample_count = root["sample_count"].get<int>();
    }
    if (root.contains("noise_sigma")) {
      spec.noise_sigma = root["noise_sigma"].get<double>();
    }
    if (root.contains("operator")) {
      const json& op = root["operator"];
      reject_unknown_keys(op, {"kind", "sensors", "scale", "per_sample"}, "operator");
      if (op.contains("kind")) {
        spec.op_kind = operator_kind_from_string(op["kind"].get<std::string>());
      }
      if (op.contains("sensors")) spec.sensors = op["sensors"].get<int>();
      if (op.contains("scale")) spec.op_scale = op["scale"].get<double>();
      if (op.contains("per_sample")) {
        spec.per_sample_operators = op["per_sample"].get<bool>();
      }
    }
    if (root.contains("sensor_align")) {
      spec.sensor_align = root["sensor_align"].get<bool>();
    }
    if (root.contains("seed")) spec.seed = root["seed"].get<uint64_t>();
  } catch (const json::type_error& err) {
    throw InvalidConfig(std::string("synth spec: ") + err.what());
  }
  return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json mesh = {{"kind", spec.mesh.kind}};
  if (spec.mesh.kind == "icosphere") {
    mesh["subdivisions"] = spec.mesh.subdivisions;
    mesh["radius"] = spec.mesh.radius;
  } else {
    mesh["path"] = spec.mesh.path;
    mesh["format"] = spec.mesh.format;
  }
  const json root = {
      {"kind", spec.kind},
      {"mesh", mesh},
      {"channels", spec.channels},
      {"n_components", spec.n_components},
      {"sigmas", spec.sigmas},
      {"sample_count", spec.sample_count},
      {"noise_sigma", spec.noise_sigma},
      {"operator",
       {{"kind", operator_kind_to_string(spec.op_kind)},
        {"sensors", spec.sensors},
        {"scale", spec.op_scale},
        {"per_sample", spec.per_sample_operators}}},
      {"sensor_align", spec.sensor_align},
      {"seed", spec.seed},
  };
  return root.dump(2);
}

}  // namespace ipca::synth
