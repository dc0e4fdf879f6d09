#include "suggestkit/evalkit.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "jsonl.hpp"
#include "suggestkit/error.hpp"
#include "suggestkit/hashing.hpp"

namespace suggestkit::eval {

using nlohmann::json;

int round_half_up_percent(std::size_t count, std::size_t total) {
    if (total == 0) return 0;
    return static_cast<int>((200 * count + total) / (2 * total));
}

double Share::percent() const noexcept {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

int Share::rounded_percent() const noexcept { return round_half_up_percent(count, total); }

json Share::to_json() const {
    return {{"count", count},
            {"total", total},
            {"exact", std::to_string(count) + "/" + std::to_string(total)},
            {"percent", percent()},
            {"percent_rounded", rounded_percent()}};
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, n);
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed.load(); i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------

std::vector<EvalQuery> parse_queries(std::string_view text) {
    std::vector<EvalQuery> out;
    std::unordered_set<std::string> seen;
    detail::for_each_record(text, "queries", [&](const json& j, std::size_t line) {
        const std::string at = "queries line " + std::to_string(line);
        EvalQuery q{detail::required_string(j, "query_id", at), detail::required_string(j, "query", at)};
        if (!seen.insert(q.query_id).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate query_id \"" + q.query_id + "\"");
        }
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<EvalQuery> load_queries(const std::filesystem::path& path) {
    return parse_queries(detail::read_file(path));
}

std::string serialize_queries(const std::vector<EvalQuery>& queries) {
    std::string out;
    for (const auto& q : queries) out += detail::dump_line(json{{"query_id", q.query_id}, {"query", q.query}});
    return out;
}

// ---------------------------------------------------------------------------

namespace {
std::string item_key(const std::string& query_id, const std::string& system) {
    return query_id + '\x1f' + system;
}
}  // namespace

LabelSet::LabelSet(std::vector<LabelRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        auto& bucket = by_item_[item_key(r.query_id, r.system)];
        for (std::size_t j : bucket) {
            if (records_[j].strategy == r.strategy && records_[j].order == r.order) {
                throw Error(ErrorCode::DuplicateId,
                            "duplicate label for query \"" + r.query_id + "\" system \"" + r.system + "\"");
            }
        }
        bucket.push_back(i);
    }
}

LabelSet LabelSet::parse(std::string_view text) {
    std::vector<LabelRecord> records;
    detail::for_each_record(text, "labels", [&](const json& j, std::size_t line) {
        const std::string at = "labels line " + std::to_string(line);
        LabelRecord r;
        r.query_id = detail::required_string(j, "query_id", at);
        r.system = detail::required_string(j, "system", at);
        const auto label = detail::required_string(j, "label", at);
        if (label == "correct") {
            r.correct = true;
        } else if (label == "incorrect") {
            r.correct = false;
        } else {
            throw Error(ErrorCode::Malformed, at + ": label must be \"correct\" or \"incorrect\"");
        }
        if (auto s = detail::optional_string(j, "strategy"); !s.empty()) r.strategy = parse_strategy(s);
        if (auto o = detail::optional_string(j, "order"); !o.empty()) r.order = parse_order(o);
        records.push_back(std::move(r));
    });
    return LabelSet(std::move(records));
}

LabelSet LabelSet::load(const std::filesystem::path& path) { return parse(detail::read_file(path)); }

std::string LabelSet::serialize() const {
    std::string out;
    for (const auto& r : records_) {
        json j = {{"query_id", r.query_id}, {"system", r.system}, {"label", r.correct ? "correct" : "incorrect"}};
        if (r.strategy) j["strategy"] = strategy_name(*r.strategy);
        if (r.order) j["order"] = order_name(*r.order);
        out += detail::dump_line(j);
    }
    return out;
}

std::optional<bool> LabelSet::lookup(const std::string& query_id, const std::string& system,
                                     StrategyKind strategy, PromptOrder order,
                                     bool require_order) const {
    auto it = by_item_.find(item_key(query_id, system));
    if (it == by_item_.end()) return std::nullopt;
    int best_score = -1;
    std::optional<bool> best;
    for (std::size_t i : it->second) {
        const auto& r = records_[i];
        if (r.strategy && *r.strategy != strategy) continue;
        if (r.order && *r.order != order) continue;
        if (require_order && !r.order) continue;
        const int score = (r.strategy ? 2 : 0) + (r.order ? 1 : 0);
        if (score > best_score) {
            best_score = score;
            best = r.correct;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Table helpers

namespace {

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream ss;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == 0) {
                line += row[c] + std::string(widths[c] - row[c].size(), ' ');
            } else {
                line += "  " + std::string(widths[c] - row[c].size(), ' ') + row[c];
            }
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        ss << line << "\n";
    }
    return ss.str();
}

json skips_json(const std::vector<Skip>& skipped) {
    json arr = json::array();
    for (const auto& s : skipped) arr.push_back({{"query_id", s.query_id}, {"system", s.system}, {"reason", s.reason}});
    return arr;
}

std::string share_cell(std::size_t count, std::size_t total) {
    return std::to_string(count) + " (" + std::to_string(round_half_up_percent(count, total)) + "%)";
}

}  // namespace

// ---------------------------------------------------------------------------
// Comparative

std::size_t ComparativeReport::count(StrategyKind strategy, const std::string& system) const {
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        if (strategies[s] != strategy) continue;
        for (std::size_t y = 0; y < systems.size(); ++y) {
            if (systems[y] == system) return correct[s][y];
        }
    }
    throw Error(ErrorCode::InvalidInput, "no cell for " + std::string(strategy_name(strategy)) + " / " + system);
}

json ComparativeReport::to_json() const {
    json rows = json::array();
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        json cells = json::object();
        for (std::size_t y = 0; y < systems.size(); ++y) {
            cells[systems[y]] = {{"correct", correct[s][y]},
                                 {"evaluated", evaluated[s][y]},
                                 {"share", Share{correct[s][y], total}.to_json()}};
        }
        rows.push_back({{"strategy", strategy_name(strategies[s])},
                        {"label", strategy_label(strategies[s])},
                        {"systems", cells}});
    }
    return {{"report", "comparative"}, {"total", total}, {"systems", systems}, {"rows", rows},
            {"skipped", skips_json(skipped)}};
}

std::string ComparativeReport::to_table() const {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Strategy"};
    for (const auto& y : systems) header.push_back(y);
    rows.push_back(header);
    for (std::size_t s = 0; s < strategies.size(); ++s) {
        std::vector<std::string> row = {std::string(strategy_label(strategies[s]))};
        for (std::size_t y = 0; y < systems.size(); ++y) row.push_back(std::to_string(correct[s][y]));
        rows.push_back(std::move(row));
    }
    std::string out = render_table(rows);
    out += "(correct out of " + std::to_string(total) + " queries";
    if (!skipped.empty()) out += ", " + std::to_string(skipped.size()) + " skipped";
    out += ")\n";
    return out;
}

ComparativeReport run_comparative(const KnowledgeBase& kb, const Embedder& embedder,
                                  const EngineConfig& base, const std::vector<EvalQuery>& queries,
                                  const std::vector<Strategy>& strategies,
                                  const std::vector<SystemUnderTest>& systems,
                                  const LabelSet& labels, const RunOptions& options) {
    if (strategies.empty()) throw Error(ErrorCode::InvalidInput, "comparative run needs at least one strategy");
    if (systems.empty()) throw Error(ErrorCode::InvalidInput, "comparative run needs at least one system");
    if (queries.empty()) throw Error(ErrorCode::InvalidInput, "comparative run needs at least one query");

    ComparativeReport report;
    for (const auto& s : strategies) report.strategies.push_back(s.kind);
    for (const auto& y : systems) report.systems.push_back(y.name);
    report.total = queries.size();
    report.correct.assign(strategies.size(), std::vector<std::size_t>(systems.size(), 0));
    report.evaluated = report.correct;

    struct Outcome {
        bool skipped = false;
        bool correct = false;
        std::string reason;
    };
    const std::size_t per_query = strategies.size() * systems.size();
    std::vector<Outcome> outcomes(queries.size() * per_query);

    parallel_for(outcomes.size(), options.jobs, [&](std::size_t task) {
        const std::size_t qi = task / per_query;
        const std::size_t si = (task % per_query) / systems.size();
        const std::size_t yi = task % systems.size();
        const auto& q = queries[qi];
        const auto& sys = systems[yi];
        EngineConfig config = base;
        config.strategy = strategies[si];
        if (!sys.model_id.empty()) config.chat_model_id = sys.model_id;

        Outcome& out = outcomes[task];
        auto label = labels.lookup(q.query_id, sys.name, config.strategy.kind, config.order);
        if (!label) {
            throw Error(ErrorCode::MissingLabel, "no label for query \"" + q.query_id + "\" system \"" +
                                                     sys.name + "\" strategy " +
                                                     std::string(strategy_name(config.strategy.kind)));
        }
        try {
            suggest(config, kb, Providers{embedder, *sys.provider}, q.query);
            out.correct = *label;
        } catch (const Error& e) {
            out.skipped = true;
            out.reason = std::string(strategy_name(config.strategy.kind)) + ": " + e.what();
        }
    });

    for (std::size_t task = 0; task < outcomes.size(); ++task) {
        const std::size_t qi = task / per_query;
        const std::size_t si = (task % per_query) / systems.size();
        const std::size_t yi = task % systems.size();
        const auto& o = outcomes[task];
        if (o.skipped) {
            report.skipped.push_back({queries[qi].query_id, systems[yi].name, o.reason});
            continue;
        }
        ++report.evaluated[si][yi];
        if (o.correct) ++report.correct[si][yi];
    }
    return report;
}

// ---------------------------------------------------------------------------
// Preference

std::string_view resolution_name(Resolution r) {
    switch (r) {
        case Resolution::Left: return "left";
        case Resolution::Right: return "right";
        case Resolution::Tie: return "tie";
    }
    return "tie";
}

Resolution parse_resolution(std::string_view name) {
    const auto n = detail::lower_ascii(detail::trim(name));
    if (n == "left") return Resolution::Left;
    if (n == "right") return Resolution::Right;
    if (n == "tie" || n == "both") return Resolution::Tie;
    throw Error(ErrorCode::Malformed, "verdict must be left, right or tie, got \"" + std::string(name) + "\"");
}

Resolution resolve(bool left_shown_as_a, Verdict verdict) {
    switch (verdict) {
        case Verdict::Tie: return Resolution::Tie;
        case Verdict::A: return left_shown_as_a ? Resolution::Left : Resolution::Right;
        case Verdict::B: return left_shown_as_a ? Resolution::Right : Resolution::Left;
    }
    return Resolution::Tie;
}

std::vector<EvalItem> parse_items(std::string_view text) {
    std::vector<EvalItem> items;
    std::unordered_set<std::string> seen;
    detail::for_each_record(text, "items", [&](const json& j, std::size_t line) {
        const std::string at = "items line " + std::to_string(line);
        EvalItem item;
        item.query_id = detail::required_string(j, "query_id", at);
        item.query = detail::required_string(j, "query", at);
        for (const auto& [name, questions] : j.at("systems").items()) {
            try {
                item.outputs.emplace(name, SuggestionSet::make(questions.get<std::vector<std::string>>()));
            } catch (const Error& e) {
                throw Error(e.code(), at + ": system \"" + name + "\": " + e.message());
            }
        }
        if (!seen.insert(item.query_id).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate query_id \"" + item.query_id + "\"");
        }
        items.push_back(std::move(item));
    });
    return items;
}

std::vector<EvalItem> load_items(const std::filesystem::path& path) { return parse_items(detail::read_file(path)); }

std::string serialize_items(const std::vector<EvalItem>& items) {
    std::string out;
    for (const auto& item : items) {
        json systems = json::object();
        for (const auto& [name, set] : item.outputs) systems[name] = set.questions();
        out += detail::dump_line(json{{"query_id", item.query_id}, {"query", item.query}, {"systems", systems}});
    }
    return out;
}

std::vector<bool> blind_assignments(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 engine(seed);
    std::vector<bool> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (engine() >> 63) == 0;
    return out;
}

json PreferenceReport::to_json() const {
    json records_json = json::array();
    for (const auto& r : records) {
        records_json.push_back({{"query_id", r.query_id},
                                {"left_system", r.left_system},
                                {"right_system", r.right_system},
                                {"shown_as_a", r.left_shown_as_a ? r.left_system : r.right_system},
                                {"verdict", verdict_name(r.verdict)},
                                {"resolved", resolution_name(r.resolved)}});
    }
    json j = {{"report", "preference"},
              {"judge", judge},
              {"left_system", left_system},
              {"right_system", right_system},
              {"total", total},
              {"judged", judged()},
              {"counts", {{left_system, left}, {right_system, right}, {"tie", tie}}},
              {"shares", {{left_system, left_share().to_json()},
                          {right_system, right_share().to_json()},
                          {"tie", tie_share().to_json()}}},
              {"records", records_json},
              {"skipped", skips_json(skipped)}};
    j["seed"] = seed ? json(*seed) : json(nullptr);
    return j;
}

std::string PreferenceReport::to_table() const { return preference_table({*this}); }

std::string preference_table(const std::vector<PreferenceReport>& reports) {
    if (reports.empty()) return {};
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"Preferred"};
    for (const auto& r : reports) header.push_back(r.judge);
    rows.push_back(header);
    std::vector<std::string> left_row = {reports.front().left_system};
    std::vector<std::string> right_row = {reports.front().right_system};
    std::vector<std::string> tie_row = {"no preference"};
    for (const auto& r : reports) {
        left_row.push_back(share_cell(r.left, r.judged()));
        right_row.push_back(share_cell(r.right, r.judged()));
        tie_row.push_back(share_cell(r.tie, r.judged()));
    }
    rows.push_back(left_row);
    rows.push_back(right_row);
    rows.push_back(tie_row);
    std::string out = render_table(rows);
    for (const auto& r : reports) {
        out += "(" + r.judge + ": " + std::to_string(r.judged()) + " judged";
        if (!r.skipped.empty()) out += ", " + std::to_string(r.skipped.size()) + " skipped";
        if (r.seed) out += ", seed " + std::to_string(*r.seed);
        out += ")\n";
    }
    return out;
}

PreferenceReport run_preference(const std::vector<EvalItem>& items, const std::string& left_system,
                                const std::string& right_system, const ChatProvider& judge,
                                const std::string& judge_name, std::uint64_t seed,
                                const RunOptions& options) {
    if (items.empty()) throw Error(ErrorCode::InvalidInput, "preference run needs at least one item");
    for (const auto& item : items) {
        if (!item.outputs.contains(left_system) || !item.outputs.contains(right_system)) {
            throw Error(ErrorCode::InvalidInput, "item \"" + item.query_id + "\" lacks output for " +
                                                     left_system + " or " + right_system);
        }
    }
    const auto assignment = blind_assignments(seed, items.size());

    struct Outcome {
        std::optional<Verdict> verdict;
        std::string reason;
    };
    std::vector<Outcome> outcomes(items.size());
    parallel_for(items.size(), options.jobs, [&](std::size_t i) {
        const auto& item = items[i];
        const auto& left = item.outputs.at(left_system);
        const auto& right = item.outputs.at(right_system);
        const bool left_is_a = assignment[i];
        try {
            outcomes[i].verdict = judge_pair(judge, item.query, left_is_a ? left : right,
                                             left_is_a ? right : left);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoVerdict) throw;
            outcomes[i].reason = e.message();
        }
    });

    PreferenceReport report;
    report.judge = judge_name;
    report.left_system = left_system;
    report.right_system = right_system;
    report.seed = seed;
    report.total = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!outcomes[i].verdict) {
            report.skipped.push_back({items[i].query_id, judge_name, outcomes[i].reason});
            continue;
        }
        PreferenceRecord r{items[i].query_id, left_system, right_system, assignment[i],
                           *outcomes[i].verdict, resolve(assignment[i], *outcomes[i].verdict)};
        switch (r.resolved) {
            case Resolution::Left: ++report.left; break;
            case Resolution::Right: ++report.right; break;
            case Resolution::Tie: ++report.tie; break;
        }
        report.records.push_back(std::move(r));
    }
    return report;
}

PreferenceReport import_human_preferences(std::string_view text, std::string left_system,
                                          std::string right_system,
                                          std::optional<std::size_t> expected_total) {
    PreferenceReport report;
    report.judge = "human";
    std::unordered_set<std::string> seen;
    detail::for_each_record(text, "verdicts", [&](const json& j, std::size_t line) {
        const std::string at = "verdicts line " + std::to_string(line);
        if (j.contains("total") && !j.contains("query_id")) {
            const auto declared = j.at("total").get<std::size_t>();
            if (expected_total && *expected_total != declared) {
                throw Error(ErrorCode::InvalidInput, at + ": declared total " + std::to_string(declared) +
                                                         " conflicts with expected " +
                                                         std::to_string(*expected_total));
            }
            expected_total = declared;
            return;
        }
        PreferenceRecord r;
        r.query_id = detail::required_string(j, "query_id", at);
        r.left_system = detail::optional_string(j, "left_system", left_system);
        r.right_system = detail::optional_string(j, "right_system", right_system);
        if (left_system.empty()) left_system = r.left_system;
        if (right_system.empty()) right_system = r.right_system;
        if (r.left_system != left_system || r.right_system != right_system) {
            throw Error(ErrorCode::Malformed, at + ": record compares " + r.left_system + " vs " +
                                                  r.right_system + ", expected " + left_system + " vs " +
                                                  right_system);
        }
        const auto verdict = detail::required_string(j, "verdict", at);
        if (!left_system.empty() && verdict == left_system) {
            r.resolved = Resolution::Left;
        } else if (!right_system.empty() && verdict == right_system) {
            r.resolved = Resolution::Right;
        } else {
            try {
                r.resolved = parse_resolution(verdict);
            } catch (const Error& e) {
                throw Error(ErrorCode::Malformed, at + ": " + e.message());
            }
        }
        r.verdict = r.resolved == Resolution::Left ? Verdict::A : r.resolved == Resolution::Right ? Verdict::B : Verdict::Tie;
        if (!seen.insert(r.query_id).second) {
            throw Error(ErrorCode::DuplicateId, at + ": duplicate query_id \"" + r.query_id + "\"");
        }
        switch (r.resolved) {
            case Resolution::Left: ++report.left; break;
            case Resolution::Right: ++report.right; break;
            case Resolution::Tie: ++report.tie; break;
        }
        report.records.push_back(std::move(r));
    });
    report.left_system = left_system.empty() ? "left" : left_system;
    report.right_system = right_system.empty() ? "right" : right_system;
    report.total = report.records.size();
    if (expected_total && *expected_total != report.judged()) {
        throw Error(ErrorCode::InvalidInput, "verdict counts " + std::to_string(report.left) + " + " +
                                                 std::to_string(report.right) + " + " +
                                                 std::to_string(report.tie) + " do not sum to total " +
                                                 std::to_string(*expected_total));
    }
    if (report.records.empty()) throw Error(ErrorCode::InvalidInput, "no verdict records");
    return report;
}

PreferenceReport run_human_preference_import(const std::filesystem::path& path,
                                             std::string left_system, std::string right_system,
                                             std::optional<std::size_t> expected_total) {
    return import_human_preferences(detail::read_file(path), std::move(left_system),
                                    std::move(right_system), expected_total);
}

// ---------------------------------------------------------------------------
// Ablation

bool AblationReport::retrieval_sets_equal() const {
    return std::all_of(traces.begin(), traces.end(), [](const AblationQueryTrace& t) {
        return t.query_first_hash == t.contexts_first_hash;
    });
}

json AblationReport::to_json() const {
    json rows = json::array();
    for (std::size_t y = 0; y < systems.size(); ++y) {
        rows.push_back({{"system", systems[y]},
                        {"query-first", query_first[y]},
                        {"contexts-first", contexts_first[y]}});
    }
    json traces_json = json::array();
    for (const auto& t : traces) {
        traces_json.push_back({{"query_id", t.query_id},
                               {"query-first", to_hex(t.query_first_hash)},
                               {"contexts-first", to_hex(t.contexts_first_hash)}});
    }
    return {{"report", "ablation"},
            {"total", total},
            {"rows", rows},
            {"retrieval_sets_equal", retrieval_sets_equal()},
            {"traces", traces_json},
            {"skipped", skips_json(skipped)}};
}

std::string AblationReport::to_table() const {
    std::vector<std::vector<std::string>> rows = {{"System", "Dynamic Contexts", "Order Changed"}};
    for (std::size_t y = 0; y < systems.size(); ++y) {
        rows.push_back({systems[y], std::to_string(query_first[y]), std::to_string(contexts_first[y])});
    }
    std::size_t equal = 0;
    for (const auto& t : traces) equal += t.query_first_hash == t.contexts_first_hash ? 1 : 0;
    std::string out = render_table(rows);
    out += "(correct out of " + std::to_string(total) + " queries; identical retrieval sets " +
           std::to_string(equal) + "/" + std::to_string(traces.size()) + ")\n";
    return out;
}

AblationReport run_ablation(const KnowledgeBase& kb, const Embedder& embedder,
                            const EngineConfig& base, const std::vector<EvalQuery>& queries,
                            const std::vector<SystemUnderTest>& systems, const LabelSet& labels,
                            const RunOptions& options) {
    if (queries.empty()) throw Error(ErrorCode::InvalidInput, "ablation run needs at least one query");
    if (systems.empty()) throw Error(ErrorCode::InvalidInput, "ablation run needs at least one system");

    EngineConfig qf = base;
    if (qf.strategy.kind != StrategyKind::DynamicContexts) qf.strategy = Strategy::dynamic_contexts();
    qf.order = PromptOrder::QueryFirst;
    EngineConfig cf = qf;
    cf.order = PromptOrder::ContextsFirst;

    AblationReport report;
    for (const auto& y : systems) report.systems.push_back(y.name);
    report.total = queries.size();
    report.query_first.assign(systems.size(), 0);
    report.contexts_first.assign(systems.size(), 0);
    report.traces.resize(queries.size());

    parallel_for(queries.size(), options.jobs, [&](std::size_t i) {
        const auto a = prepare_prompt(qf, kb, embedder, queries[i].query);
        const auto b = prepare_prompt(cf, kb, embedder, queries[i].query);
        report.traces[i] = {queries[i].query_id, retrieval_set_hash(a.prompt.plan_trace),
                            retrieval_set_hash(b.prompt.plan_trace)};
    });
    for (const auto& t : report.traces) {
        if (t.query_first_hash != t.contexts_first_hash) {
            throw Error(ErrorCode::RetrievalMismatch,
                        "query \"" + t.query_id + "\" retrieved different sets under the two orders");
        }
    }

    struct Outcome {
        bool skipped = false;
        std::string reason;
        bool qf_correct = false;
        bool cf_correct = false;
    };
    const std::size_t n_tasks = queries.size() * systems.size();
    std::vector<Outcome> outcomes(n_tasks);
    parallel_for(n_tasks, options.jobs, [&](std::size_t task) {
        const auto& q = queries[task / systems.size()];
        const auto& sys = systems[task % systems.size()];
        EngineConfig qf_sys = qf, cf_sys = cf;
        if (!sys.model_id.empty()) qf_sys.chat_model_id = cf_sys.chat_model_id = sys.model_id;
        Outcome& out = outcomes[task];
        std::optional<SuggestionSet> qf_set, cf_set;
        try {
            qf_set = suggest(qf_sys, kb, Providers{embedder, *sys.provider}, q.query).suggestions;
            cf_set = suggest(cf_sys, kb, Providers{embedder, *sys.provider}, q.query).suggestions;
        } catch (const Error& e) {
            out.skipped = true;
            out.reason = e.what();
            return;
        }
        const auto kind = qf.strategy.kind;
        auto qf_label = labels.lookup(q.query_id, sys.name, kind, PromptOrder::QueryFirst, true);
        auto cf_label = labels.lookup(q.query_id, sys.name, kind, PromptOrder::ContextsFirst, true);
        if (!qf_label || !cf_label) {
            const bool same = qf_set->questions() == cf_set->questions();
            auto shared = labels.lookup(q.query_id, sys.name, kind, PromptOrder::QueryFirst);
            if (shared && labels.lookup(q.query_id, sys.name, kind, PromptOrder::ContextsFirst) == shared && same) {
                if (!qf_label) qf_label = shared;
                if (!cf_label) cf_label = shared;
            }
        }
        if (!qf_label || !cf_label) {
            throw Error(ErrorCode::MissingLabel,
                        "no per-order label for query \"" + q.query_id + "\" system \"" + sys.name +
                            "\" (an order-less label applies only when both orders yield the same questions)");
        }
        out.qf_correct = *qf_label;
        out.cf_correct = *cf_label;
    });

    for (std::size_t task = 0; task < n_tasks; ++task) {
        const auto& o = outcomes[task];
        const std::size_t yi = task % systems.size();
        if (o.skipped) {
            report.skipped.push_back({queries[task / systems.size()].query_id, systems[yi].name, o.reason});
            continue;
        }
        report.query_first[yi] += o.qf_correct ? 1 : 0;
        report.contexts_first[yi] += o.cf_correct ? 1 : 0;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Age consistency

long long to_weeks(long long value, AgeUnit unit) {
    switch (unit) {
        case AgeUnit::Week: return value;
        case AgeUnit::Month: return value * kWeeksPerMonth;
        case AgeUnit::Year: return value * kWeeksPerYear;
    }
    return value;
}

std::vector<AgeMention> extract_ages(std::string_view text) {
    static const std::regex kAge(R"((\d+)\s*(week|month|year)s?\b)", std::regex::icase);
    std::vector<AgeMention> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kAge); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const std::string digits = m[1].str();
        // Larger values are not plausible ages and would overflow weeks.
        if (digits.size() > 12) continue;
        AgeMention a;
        a.value = std::stoll(digits);
        const auto unit = detail::lower_ascii(m[2].str());
        a.unit = unit == "week" ? AgeUnit::Week : unit == "month" ? AgeUnit::Month : AgeUnit::Year;
        a.weeks = to_weeks(a.value, a.unit);
        a.text = m[0].str();
        out.push_back(std::move(a));
    }
    return out;
}

std::string_view age_status_name(AgeStatus s) {
    switch (s) {
        case AgeStatus::Consistent: return "consistent";
        case AgeStatus::Mismatch: return "mismatch";
        case AgeStatus::NoAge: return "no_age";
    }
    return "no_age";
}

AgeCheck check_age_consistency(std::string_view query, std::string_view question) {
    AgeCheck check;
    check.query_ages = extract_ages(query);
    check.question_ages = extract_ages(question);
    if (check.query_ages.empty()) {
        check.status = AgeStatus::NoAge;
        return check;
    }
    std::set<long long> allowed;
    for (const auto& a : check.query_ages) allowed.insert(a.weeks);
    for (const auto& a : check.question_ages) {
        if (!allowed.contains(a.weeks)) check.mismatches.push_back(a);
    }
    check.status = check.mismatches.empty() ? AgeStatus::Consistent : AgeStatus::Mismatch;
    return check;
}

std::string AgeCheck::details() const {
    if (status != AgeStatus::Mismatch) return std::string(age_status_name(status));
    std::string query_part;
    for (const auto& a : query_ages) {
        if (!query_part.empty()) query_part += ", ";
        query_part += a.text + " (" + std::to_string(a.weeks) + "w)";
    }
    std::string out;
    for (const auto& a : mismatches) {
        if (!out.empty()) out += "; ";
        out += a.text + " (" + std::to_string(a.weeks) + "w) vs query " + query_part;
    }
    return out;
}

json AgeCheck::to_json() const {
    auto mentions = [](const std::vector<AgeMention>& list) {
        json arr = json::array();
        for (const auto& a : list) arr.push_back({{"text", a.text}, {"value", a.value}, {"weeks", a.weeks}});
        return arr;
    };
    return {{"status", age_status_name(status)},
            {"query_ages", mentions(query_ages)},
            {"question_ages", mentions(question_ages)},
            {"mismatches", mentions(mismatches)},
            {"details", details()}};
}

AgeReport run_age_check(const std::vector<EvalItem>& items) {
    AgeReport report;
    std::set<std::string> names;
    for (const auto& item : items) {
        for (const auto& [system, set] : item.outputs) {
            names.insert(system);
            for (const auto& q : set.questions()) {
                const auto c = check_age_consistency(item.query, q);
                ++report.questions[system];
                switch (c.status) {
                    case AgeStatus::Consistent: ++report.consistent[system]; break;
                    case AgeStatus::NoAge: ++report.no_age[system]; break;
                    case AgeStatus::Mismatch:
                        ++report.mismatched[system];
                        report.flags.push_back({item.query_id, system, q, c.details()});
                        break;
                }
            }
        }
    }
    for (const auto& s : names) {
        report.questions.try_emplace(s, 0);
        report.consistent.try_emplace(s, 0);
        report.no_age.try_emplace(s, 0);
        report.mismatched.try_emplace(s, 0);
    }
    report.systems.assign(names.begin(), names.end());
    return report;
}

json AgeReport::to_json() const {
    json rows = json::array();
    auto get = [](const std::map<std::string, std::size_t>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? std::size_t{0} : it->second;
    };
    for (const auto& s : systems) {
        rows.push_back({{"system", s},
                        {"questions", get(questions, s)},
                        {"consistent", get(consistent, s)},
                        {"mismatch", get(mismatched, s)},
                        {"no_age", get(no_age, s)}});
    }
    json flags_json = json::array();
    for (const auto& f : flags) {
        flags_json.push_back({{"query_id", f.query_id}, {"system", f.system}, {"question", f.question}, {"details", f.details}});
    }
    return {{"report", "age-check"}, {"rows", rows}, {"flags", flags_json}};
}

std::string AgeReport::to_table() const {
    std::vector<std::vector<std::string>> rows = {{"System", "Questions", "Consistent", "Mismatch", "No age"}};
    auto get = [](const std::map<std::string, std::size_t>& m, const std::string& k) {
        auto it = m.find(k);
        return std::to_string(it == m.end() ? 0 : it->second);
    };
    for (const auto& s : systems) {
        rows.push_back({s, get(questions, s), get(consistent, s), get(mismatched, s), get(no_age, s)});
    }
    std::string out = render_table(rows);
    for (const auto& f : flags) out += "  [" + f.system + "] " + f.query_id + ": " + f.details + "\n";
    return out;
}

}  // namespace suggestkit::eval
