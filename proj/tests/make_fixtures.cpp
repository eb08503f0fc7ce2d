// SPDX-License-Identifier: Apache-2.0
//
// Writes the input files used by the command-line exit code tests.

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bfi/bayes/tbn.hpp"
#include "bfi/campaign.hpp"
#include "bfi/scenario.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <dir>\n");
    return 2;
  }
  namespace fs = std::filesystem;
  const fs::path dir = argv[1];
  fs::create_directories(dir);

  // a parked car six metres ahead of a fast ego: even the golden run hits it
  bfi::Scenario hazard = bfi::builtin_scenario("A1");
  hazard.id = "wall";
  bfi::Actor wall;
  wall.id = 99;
  wall.waypoints = {{0.0, hazard.ego.x + 6.0, hazard.ego.y}};
  hazard.actors.push_back(wall);
  hazard.ego.v = 20.0;
  std::ofstream(dir / "hazard_scenario.json") << bfi::scenario_to_json(hazard);

  bfi::Scenario short_a5 = bfi::builtin_scenario("A5");
  short_a5.id = "A5short";
  short_a5.scenes = 40;
  std::ofstream(dir / "short_a5.json") << bfi::scenario_to_json(short_a5);

  // untrained network: unit-variance CPDs with zero weights mix poorly on purpose
  bfi::bayes::TemporalBayesNet tbn = bfi::bayes::TemporalBayesNet::build();
  tbn.trained = true;
  bfi::bayes::save_model(dir / "untrained_model.tsv", tbn);

  std::ofstream(dir / "bad_config.json") << "{\"model\": \"OneRandom\", \"experiments\": 0}\n";
  bfi::CampaignConfig c;
  c.label = "smoke";
  c.scenario = "A1";
  c.model = bfi::FaultModel::OneRandom;
  c.experiments = 4;
  c.golden_seeds = 2;
  std::ofstream(dir / "small_campaign.json") << bfi::campaign_config_to_json(c);
  return 0;
}
