#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coregame {

using Json = nlohmann::json;

/// Directory holding the shipped definition files. `COREGAME_DATA` overrides
/// the compiled-in location.
std::filesystem::path data_dir();
std::filesystem::path data_file(std::string_view name);

std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerant.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

}  // namespace coregame
