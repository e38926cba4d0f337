#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tdfreq/informativity.hpp"
#include "tdfreq/lti.hpp"
#include "tdfreq/metrics.hpp"
#include "tdfreq/rom.hpp"

namespace tdfreq::io {

namespace fs = std::filesystem;

// Trajectory CSV: header "k,u,y", values printed with 17 significant digits.
void write_timeseries_csv(std::ostream& os, const TimeSeries& ts);
void write_timeseries_csv(const fs::path& path, const TimeSeries& ts);
TimeSeries read_timeseries_csv(std::istream& is);
TimeSeries read_timeseries_csv(const fs::path& path);

// System JSON: {"n": n, "A": [[...], ...], "b": [...], "c": [...]}.
std::string system_to_json(const StateSpaceSystem& sys);
StateSpaceSystem system_from_json(const std::string& text);
void write_system(const fs::path& path, const StateSpaceSystem& sys);
StateSpaceSystem read_system(const fs::path& path);

// Recovery results. Infinite indicators are written as null in JSON and as
// "inf" in CSV; the informative flag is always present.
std::string recovery_to_json(const std::vector<RecoveryResult>& results);
std::vector<RecoveryResult> recovery_from_json(const std::string& text);
void write_recovery_csv(std::ostream& os, const std::vector<RecoveryResult>& results);
void write_recovery(const fs::path& json_path, const fs::path& csv_path, const std::vector<RecoveryResult>& results);
std::vector<RecoveryResult> read_recovery(const fs::path& json_path);

// ROM JSON: {"r", "E", "A", "b", "c"} plus "poles"/"residues"/"d" for vector fitting.
std::string rom_to_json(const DescriptorROM& rom);
std::string rom_to_json(const VectorFitResult& vf);
DescriptorROM rom_from_json(const std::string& text);
void write_rom(const fs::path& path, const std::string& json_text);
DescriptorROM read_rom(const fs::path& path);

// Sweep CSV: "omega,abs,re,im".
void write_sweep_csv(std::ostream& os, const FrequencySweep& s);
void write_sweep_csv(const fs::path& path, const FrequencySweep& s);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& text);

}  // namespace tdfreq::io
