// Deterministic stand-in classifier speaking the adapter line protocol.
//
//   --mode echo      answers the true category, looked up in --manifest by the
//                    image id that prefixes the stimulus file name
//   --mode constant  always answers --category
//   --mode short     replies with 999 probabilities (a protocol violation)
//   --probs          reply with a one-hot 1000-vector instead of a category
//   --crash-after N  exit without replying to request N+1

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "objrec/categories.hpp"
#include "objrec/dataset.hpp"

using namespace objrec;
using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"Stub classifier adapter"};
  std::string mode = "constant", category_name_arg = "bottle", manifest;
  bool probs = false;
  long crash_after = -1;
  app.add_option("--mode", mode)->check(CLI::IsMember({"echo", "constant", "short"}));
  app.add_option("--category", category_name_arg);
  app.add_option("--manifest", manifest);
  app.add_flag("--probs", probs);
  app.add_option("--crash-after", crash_after);
  CLI11_PARSE(app, argc, argv);

  const auto constant = parse_category(category_name_arg);
  if (!constant) {
    std::cerr << "unknown category " << category_name_arg << '\n';
    return 2;
  }
  StimulusPool pool;
  if (mode == "echo") {
    if (manifest.empty()) {
      std::cerr << "echo mode needs --manifest\n";
      return 2;
    }
    pool = read_manifest(manifest);
  }
  const auto& map = CategoryMap::builtin();

  auto one_hot = [&](Category c) {
    std::vector<double> v(1000, 0.0);
    for (const auto& e : map.entries()) {
      if (e.category == c) {
        v[static_cast<std::size_t>(e.index)] = 1.0;
        break;
      }
    }
    return v;
  };

  long served = 0;
  for (std::string line; std::getline(std::cin, line);) {
    if (crash_after >= 0 && served >= crash_after) return 3;
    const auto request = json::parse(line, nullptr, false);
    if (request.is_discarded() || !request.contains("stimulus")) return 4;
    const std::string name =
        std::filesystem::path(request["stimulus"].get<std::string>()).filename().string();

    json reply;
    if (mode == "short") {
      reply["probs"] = std::vector<double>(999, 0.001);
    } else {
      std::optional<Category> answer = constant;
      if (mode == "echo") {
        answer.reset();
        std::size_t best = 0;
        for (const auto& r : pool.records) {
          if (name.size() > r.image_id.size() && name.starts_with(r.image_id) &&
              name[r.image_id.size()] == '_' && r.image_id.size() > best) {
            best = r.image_id.size();
            answer = r.category;
          }
        }
        if (!answer) return 5;
      }
      if (probs) {
        reply["probs"] = one_hot(*answer);
      } else {
        reply["category"] = std::string(category_name(*answer));
      }
    }
    std::cout << reply.dump() << '\n' << std::flush;
    ++served;
  }
  return 0;
}
