#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "eqrn/error.hpp"
#include "eqrn/io.hpp"

namespace eqrn::io {

std::map<std::string, std::string> parse_config(std::istream& in) {
  std::stringstream filtered;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    filtered << line << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(filtered, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  std::map<std::string, std::string> out;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      out[key] = node.data();
      continue;
    }
    for (const auto& [sub, leaf] : node) out[key + "." + sub] = leaf.data();
  }
  return out;
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace eqrn::io
