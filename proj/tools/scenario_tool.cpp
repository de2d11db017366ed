// Copyright 2026 The scenario_abstraction Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scenario_abstraction/scenario_abstraction.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace sa = scenario_abstraction;

namespace
{

struct Flags
{
  std::string config;
  std::string road;
  std::string input;
  std::string out;
  std::string preset;
  std::string script;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool no_timestamp{false};
  std::optional<double> noise;
};

void log(const std::string & msg) { std::cerr << msg << '\n'; }

std::ifstream open_input(const std::string & path, const char * what, std::ios::openmode mode = std::ios::in)
{
  if (path.empty()) {
    throw sa::ValidationError(fmt::format("no {} given", what));
  }
  if (!fs::exists(path)) {
    throw sa::ValidationError(fmt::format("{} not found: {}", what, path));
  }
  std::ifstream in(path, mode);
  if (!in) {
    throw sa::ValidationError(fmt::format("cannot open {}: {}", what, path));
  }
  return in;
}

void write_file(const fs::path & path, const std::string & content)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw sa::ValidationError(fmt::format("cannot write {}", path.string()));
  }
  out << content;
}

void write_bytes(const fs::path & path, const std::vector<std::uint8_t> & bytes)
{
  write_file(path, std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> read_bytes(const std::string & path)
{
  auto in = open_input(path, "payload", std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

sa::PipelineConfig resolve_config(const Flags & f)
{
  sa::PipelineConfig cfg;
  if (!f.config.empty()) {
    auto in = open_input(f.config, "config file");
    sa::apply_config(sa::ConfigDocument::parse(in, f.config), cfg);
  }
  if (!f.road.empty()) {
    cfg.road_path = f.road;
  }
  if (!f.input.empty()) {
    cfg.input_path = f.input;
  }
  if (!f.out.empty()) {
    cfg.out_dir = f.out;
  }
  if (!f.preset.empty()) {
    cfg.preset = f.preset;
  }
  if (!f.script.empty()) {
    cfg.script_path = f.script;
  }
  if (f.seed) {
    cfg.seed = *f.seed;
  }
  if (f.workers) {
    cfg.workers = *f.workers;
  }
  if (f.no_timestamp) {
    cfg.no_timestamp = true;
  }
  if (f.noise) {
    cfg.noise_sigma_pos = *f.noise;
  }
  if (!cfg.preset.empty() && cfg.preset != "fig3" && cfg.preset != "fig3_no_decel") {
    throw sa::ValidationError(fmt::format("unknown preset '{}' (known: fig3, fig3_no_decel)", cfg.preset));
  }
  cfg.validate();
  return cfg;
}

fs::path out_dir(const sa::PipelineConfig & cfg)
{
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

std::optional<sa::DriveScript> load_script(const sa::PipelineConfig & cfg)
{
  std::optional<sa::DriveScript> script;
  if (!cfg.preset.empty()) {
    script = sa::fig3_script(cfg.preset == "fig3");
  } else if (!cfg.script_path.empty()) {
    auto in = open_input(cfg.script_path, "drive script");
    try {
      script = sa::script_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error & e) {
      throw sa::ValidationError(fmt::format("{}: {}", cfg.script_path, e.what()));
    }
  } else {
    return std::nullopt;
  }
  script->rng_seed = cfg.seed;
  if (cfg.noise_sigma_pos > 0.0) {
    script->noise_sigma_pos = cfg.noise_sigma_pos;
  }
  if (cfg.noise_sigma_speed > 0.0) {
    script->noise_sigma_speed = cfg.noise_sigma_speed;
  }
  return script;
}

sa::RoadModel load_road_for(const sa::PipelineConfig & cfg, const std::optional<sa::DriveScript> & script)
{
  if (!cfg.road_path.empty()) {
    auto in = open_input(cfg.road_path, "road file");
    return sa::load_road(in);
  }
  if (script) {
    return script->road;
  }
  throw sa::ValidationError("no road given (use --road or --preset)");
}

struct Source
{
  sa::RoadModel road;
  sa::FleetRecording recording;
  std::size_t csv_bytes{0};
};

Source load_source(const sa::PipelineConfig & cfg)
{
  const auto script = load_script(cfg);
  if (script && cfg.input_path.empty()) {
    auto drive = sa::generate(*script);
    std::ostringstream csv;
    sa::write_recording_csv(csv, drive.recording);
    const std::size_t bytes = csv.str().size();
    return {load_road_for(cfg, script), std::move(drive.recording), bytes};
  }
  auto road = load_road_for(cfg, script);
  const auto ext = fs::path(cfg.input_path).extension();
  auto in = open_input(cfg.input_path, "recording");
  const auto format = ext == ".json" ? sa::RecordingFormat::json : sa::RecordingFormat::csv;
  auto rec = sa::load_recording(in, format, fs::path(cfg.input_path).stem().string());
  return {std::move(road), std::move(rec), static_cast<std::size_t>(fs::file_size(cfg.input_path))};
}

std::vector<sa::Pattern> load_patterns(const sa::PipelineConfig & cfg)
{
  std::vector<sa::Pattern> user;
  if (!cfg.pattern_file.empty()) {
    auto in = open_input(cfg.pattern_file, "pattern file");
    try {
      user = sa::patterns_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error & e) {
      throw sa::ValidationError(fmt::format("{}: {}", cfg.pattern_file, e.what()));
    }
  }
  return sa::select_patterns(cfg.builtin_patterns, user, {cfg.cut_in_gap, cfg.decelerate_gap});
}

std::size_t action_count(const std::vector<sa::AbstractedTrack> & tracks)
{
  std::size_t n = 0;
  for (const auto & t : tracks) {
    n += t.timeline.lateral.size() + t.timeline.longitudinal.size();
  }
  return n;
}

nlohmann::json instances_json(const std::vector<sa::ScenarioInstance> & instances)
{
  nlohmann::json j = nlohmann::json::array();
  for (const auto & inst : instances) {
    j.push_back(sa::to_json(inst));
  }
  return j;
}

sa::DecodedPayload load_payload(const sa::PipelineConfig & cfg)
{
  const auto decoded = sa::decode(read_bytes(cfg.input_path));
  log(fmt::format("payload: {} tracks, {} actions", decoded.tracks.size(), action_count(decoded.tracks)));
  return decoded;
}

int cmd_synth(const sa::PipelineConfig & cfg)
{
  const auto script = load_script(cfg);
  if (!script) {
    throw sa::ValidationError("synth needs --preset or a drive script (paths.script)");
  }
  const auto drive = sa::generate(*script);
  const auto dir = out_dir(cfg);
  std::ostringstream csv;
  sa::write_recording_csv(csv, drive.recording);
  write_file(dir / "recording.csv", csv.str());
  write_file(dir / "road.json", sa::to_json(script->road).dump(2) + "\n");
  nlohmann::json gt = nlohmann::json::array();
  for (const auto & tl : drive.ground_truth) {
    gt.push_back(sa::to_json(tl));
  }
  write_file(dir / "ground_truth.json", gt.dump(2) + "\n");
  log(fmt::format(
    "synth: {} vehicles, {} samples each, {} CSV bytes", drive.recording.vehicles.size(),
    drive.recording.vehicles.empty() ? 0 : drive.recording.vehicles.front().samples.size(), csv.str().size()));
  return 0;
}

std::vector<std::uint8_t> abstract_to_payload(const sa::PipelineConfig & cfg, const Source & src)
{
  const auto tracks = sa::abstract_recording(src.road, src.recording, cfg.segmentation, cfg.fit, cfg.workers);
  log(fmt::format("abstract: {} tracks, {} actions", tracks.size(), action_count(tracks)));
  auto bytes = sa::encode(tracks, src.recording.recording_id);
  log(fmt::format(
    "payload: {} bytes ({:.2f} % of {} source CSV bytes)", bytes.size(),
    src.csv_bytes ? 100.0 * static_cast<double>(bytes.size()) / static_cast<double>(src.csv_bytes) : 0.0,
    src.csv_bytes));
  return bytes;
}

int cmd_abstract(const sa::PipelineConfig & cfg)
{
  const auto src = load_source(cfg);
  const auto bytes = abstract_to_payload(cfg, src);
  const auto dir = out_dir(cfg);
  write_bytes(dir / "abstracted.bin", bytes);
  nlohmann::json j = nlohmann::json::array();
  for (const auto & t : sa::decode(bytes).tracks) {
    j.push_back(sa::to_json(t));
  }
  write_file(dir / "abstracted.json", j.dump(2) + "\n");
  return 0;
}

sa::Detection run_detection(
  const sa::PipelineConfig & cfg, const sa::RoadModel & road, const std::vector<sa::AbstractedTrack> & tracks)
{
  auto d = sa::detect_scenarios(road, tracks, load_patterns(cfg), cfg.dt, cfg.workers);
  log(fmt::format("detect: {} relations, {} instances", d.relations.size(), d.instances.size()));
  return d;
}

void write_stats(const sa::PipelineConfig & cfg, const fs::path & dir, std::vector<sa::ScenarioInstance> & instances,
                 const std::vector<sa::AbstractedTrack> & tracks)
{
  const auto table = sa::extract_parameters(instances, tracks, {cfg.speed_bucket_width});
  sa::attach_parameters(instances, table);
  std::ostringstream csv;
  sa::write_parameter_csv(csv, table);
  write_file(dir / "params.csv", csv.str());
  write_file(dir / "stats.json", sa::stats_report(table, cfg.stats).dump(2) + "\n");
  log(fmt::format("stats: {} rows, {} dropped", table.rows(), table.dropped));
}

int cmd_detect(const sa::PipelineConfig & cfg)
{
  const auto road = load_road_for(cfg, load_script(cfg));
  const auto payload = load_payload(cfg);
  const auto d = run_detection(cfg, road, payload.tracks);
  write_file(out_dir(cfg) / "instances.json", instances_json(d.instances).dump(2) + "\n");
  return 0;
}

int cmd_stats(const sa::PipelineConfig & cfg)
{
  const auto road = load_road_for(cfg, load_script(cfg));
  const auto payload = load_payload(cfg);
  auto d = run_detection(cfg, road, payload.tracks);
  const auto dir = out_dir(cfg);
  write_stats(cfg, dir, d.instances, payload.tracks);
  write_file(dir / "instances.json", instances_json(d.instances).dump(2) + "\n");
  return 0;
}

sa::XoscOptions xosc_options(const sa::PipelineConfig & cfg, const std::string & recording_id)
{
  sa::XoscOptions opt;
  opt.dt = cfg.dt;
  opt.suppress_timestamp = cfg.no_timestamp;
  opt.recording_id = recording_id;
  return opt;
}

int cmd_export(const sa::PipelineConfig & cfg)
{
  const auto payload = load_payload(cfg);
  const auto xml = sa::export_xosc(payload.tracks, std::nullopt, xosc_options(cfg, payload.recording_id));
  write_file(out_dir(cfg) / "scenario.xosc", xml);
  log(fmt::format("export: {} bytes of XML", xml.size()));
  return 0;
}

int cmd_inspect(const sa::PipelineConfig & cfg)
{
  const auto ext = fs::path(cfg.input_path).extension();
  nlohmann::json j;
  if (ext == ".bin") {
    const auto payload = load_payload(cfg);
    j["recording_id"] = payload.recording_id;
    j["tracks"] = nlohmann::json::array();
    for (const auto & t : payload.tracks) {
      j["tracks"].push_back(sa::to_json(t));
    }
  } else {
    auto in = open_input(cfg.input_path, "recording");
    const auto rec = sa::load_recording(
      in, ext == ".json" ? sa::RecordingFormat::json : sa::RecordingFormat::csv,
      fs::path(cfg.input_path).stem().string());
    j["recording_id"] = rec.recording_id;
    j["sample_rate"] = rec.sample_rate;
    j["vehicles"] = nlohmann::json::array();
    for (const auto & v : rec.vehicles) {
      j["vehicles"].push_back(
        {{"vehicle_id", v.vehicle_id}, {"role", sa::to_string(v.role)}, {"samples", v.samples.size()}});
    }
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_pipeline(const sa::PipelineConfig & cfg)
{
  const auto src = load_source(cfg);
  const auto bytes = abstract_to_payload(cfg, src);
  const auto dir = out_dir(cfg);
  write_bytes(dir / "abstracted.bin", bytes);
  // Everything downstream works on what survived the wire format.
  const auto payload = sa::decode(bytes);
  auto d = run_detection(cfg, src.road, payload.tracks);
  write_stats(cfg, dir, d.instances, payload.tracks);
  write_file(dir / "instances.json", instances_json(d.instances).dump(2) + "\n");
  const auto opt = xosc_options(cfg, payload.recording_id);
  write_file(dir / "scenario.xosc", sa::export_xosc(payload.tracks, std::nullopt, opt));
  for (std::size_t i = 0; i < d.instances.size(); ++i) {
    const auto & inst = d.instances[i];
    write_file(
      dir / fmt::format("scenario_{:02}_{}.xosc", i, inst.pattern_id), sa::export_xosc(payload.tracks, inst, opt));
  }
  log(fmt::format("export: {} scenario files", d.instances.size() + 1));
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Scenario abstraction toolkit: lane-frame abstraction, scenario detection, statistics, export"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "TOML-style configuration file");
  app.add_option("--road", f.road, "road model JSON");
  app.add_option("--input", f.input, "recording (.csv/.json) or payload (.bin)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--preset", f.preset, "built-in drive script (fig3, fig3_no_decel)");
  app.add_option("--script", f.script, "drive script JSON for synth");
  app.add_option("--seed", f.seed, "noise seed");
  app.add_option("--workers", f.workers, "worker threads per stage");
  app.add_option("--noise", f.noise, "position noise sigma for synthetic drives [m]");
  app.add_flag("--no-timestamp", f.no_timestamp, "fixed date in exported XML");

  struct Sub
  {
    const char * name;
    const char * help;
    int (*fn)(const sa::PipelineConfig &);
  };
  const std::vector<Sub> subs{
    {"synth", "generate a synthetic recording", cmd_synth},
    {"abstract", "recording -> abstracted.bin", cmd_abstract},
    {"detect", "abstracted.bin -> instances.json", cmd_detect},
    {"stats", "abstracted.bin -> params.csv, stats.json", cmd_stats},
    {"export", "abstracted.bin -> scenario.xosc", cmd_export},
    {"inspect", "print a recording or payload summary", cmd_inspect},
    {"pipeline", "all stages end to end", cmd_pipeline}};
  for (const auto & s : subs) {
    app.add_subcommand(s.name, s.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError & e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const auto cfg = resolve_config(f);
    for (const auto & s : subs) {
      if (app.got_subcommand(s.name)) {
        return s.fn(cfg);
      }
    }
    std::cerr << app.help();
    return 1;
  } catch (const sa::InvariantViolation & e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const sa::ValidationError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const sa::PayloadError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const sa::FitError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception & e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
