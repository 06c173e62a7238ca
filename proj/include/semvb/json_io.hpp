#pragma once

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

#include "semvb/criteria.hpp"
#include "semvb/dataset.hpp"
#include "semvb/latent_model.hpp"
#include "semvb/outcome_model.hpp"
#include "semvb/sim_study.hpp"
#include "semvb/uncertainty.hpp"

namespace semvb {

using json = nlohmann::ordered_json;

/// Throws ConfigError naming the first unknown key.
void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& context);
const json& require_key(const json& j, const std::string& key,
                        const std::string& context);
double require_number(const json& j, const std::string& key,
                      const std::string& context);
int require_int(const json& j, const std::string& key, const std::string& context);

/// Parsed model configuration: column bindings plus one of the two specs.
struct ModelConfig {
  std::vector<std::string> outcomes;
  std::vector<std::string> covariates;
  std::variant<OutcomeMixtureSpec, LatentMixtureSpec> spec;
  InitOptions outcome_init;
  LatentInitOptions latent_init;
  /// Intercept prior means to be filled from mixture-regression intercepts
  /// at fit time (outcome-mixture only).
  bool mu_mu_from_mixreg = false;

  bool is_outcome() const {
    return std::holds_alternative<OutcomeMixtureSpec>(spec);
  }
};

ModelConfig parse_model_config(const json& j, const std::string& context);
json model_config_to_json(const ModelConfig& config);

SimulationTruth parse_truth(const json& j, const std::string& context);
json truth_to_json(const SimulationTruth& truth);

StudyConfig parse_study_config(const json& j, const std::string& context);

json fit_report_to_json(const FitReport& report);

json outcome_state_to_json(const OutcomeQState& s, const OutcomeMixtureSpec& spec);
OutcomeQState outcome_state_from_json(const json& j, const OutcomeMixtureSpec& spec,
                                      const std::string& context);

json latent_state_to_json(const LatentQState& s, const LatentMixtureSpec& spec);
LatentQState latent_state_from_json(const json& j, const LatentMixtureSpec& spec,
                                    const std::string& context);

json criteria_to_json(const CriteriaReport& rep);

/// Full fitted-model file (spec echo + fit report + state).
json fit_file_to_json(const ModelConfig& config, const OutcomeQState& s,
                      const FitReport& report);
json fit_file_to_json(const ModelConfig& config, const LatentQState& s,
                      const FitReport& report);

struct LoadedFit {
  ModelConfig config;
  std::variant<OutcomeQState, LatentQState> state;
};
LoadedFit load_fit_file(const std::string& path);

json load_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace semvb
