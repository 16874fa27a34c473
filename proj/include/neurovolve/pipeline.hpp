#ifndef NEUROVOLVE_PIPELINE_HPP
#define NEUROVOLVE_PIPELINE_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "neurovolve/rng.hpp"
#include "neurovolve/transforms.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::augment {

enum class TransformKind { Affine, Flip, BiasField, Elastic, LabelMaskedElastic };

inline const char* transform_kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::Affine: return "affine";
    case TransformKind::Flip: return "flip";
    case TransformKind::BiasField: return "bias_field";
    case TransformKind::Elastic: return "elastic";
    case TransformKind::LabelMaskedElastic: return "label_masked_elastic";
  }
  return "?";
}

using TransformParams =
    std::variant<AffineParams, FlipParams, BiasFieldParams, ElasticParams,
                 LabelMaskedElasticParams>;

/// One step of the augmentation chain: a transform kind, its firing
/// probability, and its parameter ranges. The label-masked elastic step is
/// applied deterministically, so its probability is fixed at 1.
struct TransformSpec {
  double probability = 1.0;
  TransformParams params;

  TransformKind kind() const {
    return static_cast<TransformKind>(params.index());
  }

  void validate() const {
    if (probability < 0.0 || probability > 1.0)
      throw std::invalid_argument("transform probability must be in [0,1]");
    if (kind() == TransformKind::LabelMaskedElastic && probability != 1.0)
      throw std::invalid_argument(
          "label_masked_elastic probability is fixed at 1.0");
  }
};

/// The ordered augmentation chain plus the global seed that every derived
/// random stream hangs off.
struct PipelineSpec {
  std::uint64_t global_seed = 0;
  std::vector<TransformSpec> transforms;

  void validate() const {
    for (const auto& t : transforms) t.validate();
  }

  /// The default chain: affine 0.5, left-right flip, bias field 0.3,
  /// global elastic 0.3, then the deterministic label-masked elastic.
  static PipelineSpec defaults(std::uint64_t seed = 0) {
    PipelineSpec spec;
    spec.global_seed = seed;
    spec.transforms = {
        TransformSpec{0.5, AffineParams{}},
        TransformSpec{1.0, FlipParams{}},
        TransformSpec{0.3, BiasFieldParams{}},
        TransformSpec{0.3, ElasticParams{}},
        TransformSpec{1.0, LabelMaskedElasticParams{}},
    };
    return spec;
  }
};

/// Applies the chain in order. Each probabilistic transform fires iff the
/// first uniform draw of its own stream is below its probability; the
/// label-masked elastic always fires. Streams are derived from
/// (global_seed, input case id, replicate_index, transform index), so the
/// result is a pure function of its inputs.
inline Case apply_pipeline(const Case& input, const PipelineSpec& spec,
                           int replicate_index, const LabelScheme& scheme) {
  spec.validate();
  const std::string source_id = input.case_id;
  Case current = input;
  for (std::size_t t = 0; t < spec.transforms.size(); ++t) {
    const TransformSpec& ts = spec.transforms[t];
    RngStream rng(spec.global_seed, source_id,
                  static_cast<std::uint64_t>(replicate_index), t);
    switch (ts.kind()) {
      case TransformKind::Affine:
        if (rng.uniform() < ts.probability)
          current = random_affine(current, std::get<AffineParams>(ts.params),
                                  rng);
        break;
      case TransformKind::Flip:
        if (rng.uniform() < ts.probability)
          current = random_flip(current, std::get<FlipParams>(ts.params), rng);
        break;
      case TransformKind::BiasField:
        if (rng.uniform() < ts.probability)
          current = random_bias_field(
              current, std::get<BiasFieldParams>(ts.params), rng);
        break;
      case TransformKind::Elastic:
        if (rng.uniform() < ts.probability)
          current = random_elastic(current,
                                   std::get<ElasticParams>(ts.params), rng);
        break;
      case TransformKind::LabelMaskedElastic:
        current = label_masked_elastic(
            current, scheme, std::get<LabelMaskedElasticParams>(ts.params),
            rng);
        break;
    }
  }
  current.case_id = source_id + "-aug" + std::to_string(replicate_index);
  return current;
}

// ---------------------------------------------------------------------------
// JSON serialization of the pipeline config.
// ---------------------------------------------------------------------------

/// Throws when `obj` holds a key outside `allowed`; `context` names the
/// enclosing config block in the message.
inline void check_keys(const nlohmann::json& obj,
                       std::initializer_list<const char*> allowed,
                       const std::string& context) {
  if (!obj.is_object())
    throw std::runtime_error("config: " + context + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= (item.key() == a);
    if (!ok)
      throw std::runtime_error("config: unknown key \"" + item.key() +
                               "\" in " + context);
  }
}

inline std::array<int, 3> parse_int3(const nlohmann::json& j,
                                     const std::string& context) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("config: " + context +
                             " must be an array of 3 integers");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

inline TransformSpec parse_transform(const nlohmann::json& j) {
  check_keys(j, {"kind", "probability", "parameters"}, "transform");
  if (!j.contains("kind"))
    throw std::runtime_error("config: transform entry is missing \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const nlohmann::json params = j.value("parameters", nlohmann::json::object());
  const std::string ctx = "transform \"" + kind + "\" parameters";

  TransformSpec spec;
  if (kind == "affine") {
    check_keys(params,
               {"rotation_deg", "scale_min", "scale_max", "translation_mm"},
               ctx);
    AffineParams p;
    p.rotation_deg = params.value("rotation_deg", p.rotation_deg);
    p.scale_min = params.value("scale_min", p.scale_min);
    p.scale_max = params.value("scale_max", p.scale_max);
    p.translation_mm = params.value("translation_mm", p.translation_mm);
    spec.params = p;
    spec.probability = 0.5;
  } else if (kind == "flip") {
    check_keys(params, {"axis_probabilities"}, ctx);
    FlipParams p;
    if (params.contains("axis_probabilities")) {
      const auto& a = params.at("axis_probabilities");
      if (!a.is_array() || a.size() != 3)
        throw std::runtime_error(
            "config: axis_probabilities must be an array of 3 numbers");
      for (int i = 0; i < 3; ++i) p.axis_probabilities[i] = a[i].get<double>();
    }
    spec.params = p;
    spec.probability = 1.0;
  } else if (kind == "bias_field") {
    check_keys(params, {"order", "coeff_min", "coeff_max"}, ctx);
    BiasFieldParams p;
    p.order = params.value("order", p.order);
    p.coeff_min = params.value("coeff_min", p.coeff_min);
    p.coeff_max = params.value("coeff_max", p.coeff_max);
    spec.params = p;
    spec.probability = 0.3;
  } else if (kind == "elastic") {
    check_keys(params, {"grid_shape", "max_displacement_mm"}, ctx);
    ElasticParams p;
    if (params.contains("grid_shape"))
      p.grid_shape = parse_int3(params.at("grid_shape"), "grid_shape");
    p.max_disp_mm = params.value("max_displacement_mm", p.max_disp_mm);
    spec.params = p;
    spec.probability = 0.3;
  } else if (kind == "label_masked_elastic") {
    check_keys(params,
               {"grid_shape", "max_displacement_mm", "dilation_vox",
                "sigma_vox"},
               ctx);
    LabelMaskedElasticParams p;
    if (params.contains("grid_shape"))
      p.grid_shape = parse_int3(params.at("grid_shape"), "grid_shape");
    p.max_disp_mm = params.value("max_displacement_mm", p.max_disp_mm);
    p.dilation_vox = params.value("dilation_vox", p.dilation_vox);
    p.sigma_vox = params.value("sigma_vox", p.sigma_vox);
    spec.params = p;
    spec.probability = 1.0;
  } else {
    throw std::runtime_error("config: unknown transform kind \"" + kind +
                             "\"");
  }
  if (j.contains("probability"))
    spec.probability = j.at("probability").get<double>();
  spec.validate();
  return spec;
}

inline PipelineSpec parse_pipeline(const nlohmann::json& j) {
  check_keys(j, {"global_seed", "transforms"}, "pipeline");
  PipelineSpec spec = PipelineSpec::defaults();
  if (j.contains("global_seed"))
    spec.global_seed = j.at("global_seed").get<std::uint64_t>();
  if (j.contains("transforms")) {
    if (!j.at("transforms").is_array())
      throw std::runtime_error("config: pipeline transforms must be an array");
    spec.transforms.clear();
    for (const auto& t : j.at("transforms"))
      spec.transforms.push_back(parse_transform(t));
  }
  spec.validate();
  return spec;
}

inline nlohmann::json transform_to_json(const TransformSpec& t) {
  nlohmann::json j;
  j["kind"] = transform_kind_name(t.kind());
  j["probability"] = t.probability;
  nlohmann::json p;
  switch (t.kind()) {
    case TransformKind::Affine: {
      const auto& a = std::get<AffineParams>(t.params);
      p = {{"rotation_deg", a.rotation_deg},
           {"scale_min", a.scale_min},
           {"scale_max", a.scale_max},
           {"translation_mm", a.translation_mm}};
      break;
    }
    case TransformKind::Flip: {
      const auto& a = std::get<FlipParams>(t.params);
      p = {{"axis_probabilities", a.axis_probabilities}};
      break;
    }
    case TransformKind::BiasField: {
      const auto& a = std::get<BiasFieldParams>(t.params);
      p = {{"order", a.order},
           {"coeff_min", a.coeff_min},
           {"coeff_max", a.coeff_max}};
      break;
    }
    case TransformKind::Elastic: {
      const auto& a = std::get<ElasticParams>(t.params);
      p = {{"grid_shape", a.grid_shape},
           {"max_displacement_mm", a.max_disp_mm}};
      break;
    }
    case TransformKind::LabelMaskedElastic: {
      const auto& a = std::get<LabelMaskedElasticParams>(t.params);
      p = {{"grid_shape", a.grid_shape},
           {"max_displacement_mm", a.max_disp_mm},
           {"dilation_vox", a.dilation_vox},
           {"sigma_vox", a.sigma_vox}};
      break;
    }
  }
  j["parameters"] = p;
  return j;
}

inline nlohmann::json pipeline_to_json(const PipelineSpec& spec) {
  nlohmann::json j;
  j["global_seed"] = spec.global_seed;
  j["transforms"] = nlohmann::json::array();
  for (const auto& t : spec.transforms)
    j["transforms"].push_back(transform_to_json(t));
  return j;
}

}  // namespace neurovolve::augment

#endif  // NEUROVOLVE_PIPELINE_HPP
