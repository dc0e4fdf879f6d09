#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "suggestkit/engine.hpp"
#include "suggestkit/evalkit.hpp"
#include "suggestkit/fixtures.hpp"

namespace testutil {

// synth(seed, 228, 35) plus the evaluation fixtures and scripted systems.
struct EvalWorld {
    suggestkit::LocalEmbedder embedder;
    std::shared_ptr<const suggestkit::KnowledgeBase> kb;
    suggestkit::EngineConfig base;
    suggestkit::fixtures::EvalFixtures fx;
    std::map<std::string, std::unique_ptr<suggestkit::ScriptedProvider>> providers;
    std::map<std::string, std::unique_ptr<suggestkit::ScriptedProvider>> judges;

    explicit EvalWorld(std::uint64_t seed = 7) {
        kb = suggestkit::build_knowledge_base(suggestkit::synth_corpus(seed, 228, 35), embedder);
        fx = suggestkit::fixtures::make_eval_fixtures(*kb, embedder, base, seed);
        for (const auto& [name, script] : fx.system_scripts) {
            providers[name] = std::make_unique<suggestkit::ScriptedProvider>(script);
        }
        for (const auto& [name, script] : fx.judge_scripts) {
            judges[name] = std::make_unique<suggestkit::ScriptedProvider>(script);
        }
    }

    std::vector<suggestkit::eval::SystemUnderTest> systems() const {
        std::vector<suggestkit::eval::SystemUnderTest> out;
        for (const auto& name : suggestkit::fixtures::kSystems) out.push_back({name, providers.at(name).get(), name});
        return out;
    }

    static std::vector<suggestkit::Strategy> strategies() {
        using suggestkit::Strategy;
        return {Strategy::zero_shot(), Strategy::static_few_shot({}), Strategy::dynamic_few_shot(),
                Strategy::dynamic_contexts()};
    }
};

}  // namespace testutil
