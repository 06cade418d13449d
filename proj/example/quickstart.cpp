// Trains a linear SVM on LBP features from a small synthetic corpus and scores a fresh one.

#include <cstdio>

#include "narw/pipeline.hpp"

int main() {
    using namespace narw;
    CorpusRecipe recipe;
    recipe.upcalls = recipe.humpback = recipe.tonal = recipe.ambient = 40;
    recipe.seed = 7;
    const Corpus train = synth_corpus(recipe);
    recipe.seed = 8;
    const Corpus test = synth_corpus(recipe);

    PipelineConfig config;  // LBP branch, linear SVM
    const TrainedModel model = run_train(train, config);
    const DetectResult result = run_detect(test, config, model);

    std::printf("%zu test segments, %zu rejected by stage 1, %zu classified\n", result.records.size(), result.gate_rejected,
                result.classifier_invocations);
    const EvalReport& r = *result.report;
    std::printf("upcall %s%%, non-upcall %s%%, overall %s%%, AUC %.3f\n", format_rate(r.rates.upcall_rate).c_str(),
                format_rate(r.rates.nonupcall_rate).c_str(), format_rate(r.rates.overall_rate).c_str(), r.auc);
}
