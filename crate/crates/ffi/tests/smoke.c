#include <math.h>
#include <stdio.h>
#include <string.h>

#include "pacpomdp.h"

#define CHECK(call)                                                           \
    do {                                                                      \
        PacStatus st_ = (call);                                               \
        if (st_ != PAC_STATUS_OK) {                                           \
            const char *m_ = pac_last_error();                                \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, m_ ? m_ : ""); \
            return 1;                                                         \
        }                                                                     \
    } while (0)

int main(void) {
    PacModel *tiger = NULL;
    CHECK(pac_model_tiger(0.85, 3, &tiger));

    double value = 0.0;
    CHECK(pac_optimal_value(tiger, &value));

    char *json = NULL;
    CHECK(pac_model_to_json(tiger, &json));
    PacModel *copy = NULL;
    CHECK(pac_model_from_json(json, &copy));
    pac_string_free(json);

    double regret = NAN, err = NAN;
    PacModel *est = NULL;
    CHECK(pac_run_pipeline(copy, 0, 0, 1, &regret, &err, &est));

    double bound = NAN;
    CHECK(pac_simulation_gap_bound(tiger, est, &bound));

    PacModel *bad = NULL;
    if (pac_model_tiger(0.2, 3, &bad) != PAC_STATUS_INVALID_ARGUMENT || bad != NULL ||
        strstr(pac_last_error(), "accuracy") == NULL) {
        fprintf(stderr, "bad accuracy was accepted\n");
        return 1;
    }

    printf("value %.6f regret %.3e error %.3e bound %.3e\n", value, regret, err, bound);
    pac_model_free(est);
    pac_model_free(copy);
    pac_model_free(tiger);
    return fabs(regret) <= 1e-6 && err <= 1e-6 ? 0 : 1;
}
