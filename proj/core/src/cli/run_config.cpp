#include "lma4rec/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lma4rec/error.hpp"

namespace lma4rec::cli {

namespace {

namespace pt = boost::property_tree;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last) throw ParseError("invalid value '" + text + "' for " + key, 0);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ParseError("invalid boolean '" + text + "' for " + key, 0);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_number<T>(key, item.substr(b, e - b + 1)));
  }
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename Access>
Field num_field(Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  return Field{[access](const RunConfig& c) { return fmt::format("{}", access(c)); },
               [access](RunConfig& c, const std::string& k, const std::string& v) {
                 access(c) = parse_number<T>(k, v);
               }};
}

template <typename Access>
Field bool_field(Access access) {
  return Field{[access](const RunConfig& c) -> std::string { return access(c) ? "true" : "false"; },
               [access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_bool(k, v); }};
}

template <typename Access>
Field str_field(Access access) {
  return Field{[access](const RunConfig& c) { return access(c); },
               [access](RunConfig& c, const std::string&, const std::string& v) { access(c) = v; }};
}

template <typename T, typename Access>
Field list_field(Access access) {
  return Field{[access](const RunConfig& c) { return fmt::format("{}", fmt::join(access(c), ",")); },
               [access](RunConfig& c, const std::string& k, const std::string& v) {
                 access(c) = parse_list<T>(k, v);
               }};
}

#define LMA_REF(expr) [](auto& c) -> auto& { return expr; }

// Ordered by section; the order is the on-disk order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"run.seed", num_field(LMA_REF(c.seed))},
      {"run.output_dir", str_field(LMA_REF(c.output_dir))},
      {"data.input", str_field(LMA_REF(c.data.input))},
      {"data.format", str_field(LMA_REF(c.data.format))},
      {"data.split", str_field(LMA_REF(c.data.split))},
      {"data.name", str_field(LMA_REF(c.data.name))},
      {"data.core_k", num_field(LMA_REF(c.data.core_k))},
      {"model.embed_dim", num_field(LMA_REF(c.model.embed_dim))},
      {"model.num_heads", num_field(LMA_REF(c.model.num_heads))},
      {"model.num_blocks", num_field(LMA_REF(c.model.num_blocks))},
      {"model.max_len", num_field(LMA_REF(c.model.max_len))},
      {"model.attention_dropout", num_field(LMA_REF(c.model.attention_dropout))},
      {"model.embedding_dropout", num_field(LMA_REF(c.model.embedding_dropout))},
      {"model.lbd_init_keep", num_field(LMA_REF(c.model.lbd_init_keep))},
      {"model.use_lbd", bool_field(LMA_REF(c.model.use_lbd))},
      {"augment.crop_ratio", num_field(LMA_REF(c.augment.crop_ratio))},
      {"augment.mask_ratio", num_field(LMA_REF(c.augment.mask_ratio))},
      {"augment.reorder_ratio", num_field(LMA_REF(c.augment.reorder_ratio))},
      {"augment.substitute_ratio", num_field(LMA_REF(c.augment.substitute_ratio))},
      {"augment.insert_ratio", num_field(LMA_REF(c.augment.insert_ratio))},
      {"augment.short_sequence_threshold", num_field(LMA_REF(c.augment.short_sequence_threshold))},
      {"augment.correlation_window", num_field(LMA_REF(c.augment.correlation_window))},
      {"augment.correlation_top_k", num_field(LMA_REF(c.augment.correlation_top_k))},
      {"loss.lambda", num_field(LMA_REF(c.train.weights.lambda))},
      {"loss.temperature", num_field(LMA_REF(c.train.weights.temperature))},
      {"train.learning_rate", num_field(LMA_REF(c.train.learning_rate))},
      {"train.beta1", num_field(LMA_REF(c.train.beta1))},
      {"train.beta2", num_field(LMA_REF(c.train.beta2))},
      {"train.adam_eps", num_field(LMA_REF(c.train.adam_eps))},
      {"train.batch_size", num_field(LMA_REF(c.train.batch_size))},
      {"train.max_epochs", num_field(LMA_REF(c.train.max_epochs))},
      {"train.patience", num_field(LMA_REF(c.train.patience))},
      {"train.eval_every", num_field(LMA_REF(c.train.eval_every))},
      {"train.no_ssl", bool_field(LMA_REF(c.train.no_ssl))},
      {"train.no_lma", bool_field(LMA_REF(c.train.no_lma))},
      {"train.no_da", bool_field(LMA_REF(c.train.no_da))},
      {"train.phi_lr_scale", num_field(LMA_REF(c.train.phi_lr_scale))},
      {"train.clip_norm", num_field(LMA_REF(c.train.clip_norm))},
      {"train.mask_history", bool_field(LMA_REF(c.train.mask_history))},
      {"synthetic.users", num_field(LMA_REF(c.synthetic.users))},
      {"synthetic.items", num_field(LMA_REF(c.synthetic.items))},
      {"synthetic.rule_prob", num_field(LMA_REF(c.synthetic.rule_prob))},
      {"synthetic.min_len", num_field(LMA_REF(c.synthetic.min_len))},
      {"synthetic.max_len", num_field(LMA_REF(c.synthetic.max_len))},
      {"synthetic.clean_holdout", bool_field(LMA_REF(c.synthetic.clean_holdout))},
      {"synthetic.seed", num_field(LMA_REF(c.synthetic.seed))},
      {"sweep.lambdas", list_field<double>(LMA_REF(c.sweep_lambdas))},
      {"sweep.hidden_sizes", list_field<std::size_t>(LMA_REF(c.sweep_hidden))},
  };
  return table;
}

#undef LMA_REF

const Field& find_field(const std::string& key) {
  for (const auto& [k, f] : fields()) {
    if (k == key) return f;
  }
  throw ParseError("unknown configuration key '" + key + "'", 0);
}

}  // namespace

train::TrainConfig RunConfig::resolved_train() const {
  train::TrainConfig t = train;
  t.seed = seed;
  return t;
}

void RunConfig::validate() const {
  model.validate();
  augment.validate();
  resolved_train().validate();
  if (sweep_lambdas.empty() || sweep_hidden.empty()) throw ContractError("config: sweep grids must be nonempty");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : fields()) keys.push_back(k);
  return keys;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, key, value);
}

RunConfig read_run_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ParseError("key '" + section + "' must be inside a section", 0);
    }
    for (const auto& [key, value] : body) apply_override(config, section + "." + key, value.data());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("no such input: " + path.string());
  return read_run_config(in);
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  std::string current;
  for (const auto& [key, field] : fields()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << field.get(config) << '\n';
  }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_run_config(out, config);
}

}  // namespace lma4rec::cli
