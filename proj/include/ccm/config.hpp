#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ccm/sim.hpp"
#include "ccm/synth.hpp"

namespace ccm {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct ProjectConfig {
  SystemModel model;
  SynthesisParams controller;
  SynthesisParams observer;
  SimConfig sim;
  bool x0_on_oscillation = false;  // x0 = oscillation
  std::string output_dir = "out";
};

/// Sectioned key = value text; see docs/formats.md.
ProjectConfig parse_config(std::string_view text, const std::string& source = "<config>");
/// Reads a file, or a bundled preset when `path` names one (mg-slow, ...).
ProjectConfig load_config(const std::string& path);
std::vector<std::string> preset_names();

/// Concretizes x0 = oscillation using the configured model.
SimConfig resolve_sim(const ProjectConfig& cfg);

}  // namespace ccm
