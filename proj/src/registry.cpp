#include "maniapipe/registry.hpp"

namespace maniapipe::eval {

const ReferenceRegistry& builtin_registry() {
  static const ReferenceRegistry registry = [] {
    ReferenceRegistry r;
    r.related_systems = {
        {"Ringeval et al. (AVEC 2018 baseline)", "eGEMAPS+FAUs", "SVMs", 0.550, 0.500},
        {"Yang et al.", "Arousal and upper body posture features", "Multistream", 0.783,
         0.407},
        {"Du et al.", "MFCC", "IncepLSTM", 0.651, std::nullopt},
        {"Xing et al.", "eGEMAPS+MFCC+AUs+eyesight features",
         "Hierarchical recall model", 0.867, 0.574},
        {"Syed, Sidorov, Marshall", "AUs+gaze+pose", "GEWELMs", 0.550, 0.482},
        {"Ebrahim, Al-Ayyoub, Alsmirat", "MFCC+eGEMAPS+BoAW+DeepSpectrum+FAUs+BoVW",
         "Bi-LSTM", 0.592, 0.444},
        {"Amiriparian et al.", "Mel-Spectrogram", "CapsNet", 0.462, 0.455},
        {"Ren et al.", "MFCC", "Multi-instance learning", 0.616, 0.574},
    };
    r.task_groups = {
        {"1-2-3", 0.46, 0.47},
        {"4-5", 0.34, 0.36},
        {"6-7", 0.46, 0.53},
    };
    return r;
  }();
  return registry;
}

}  // namespace maniapipe::eval
