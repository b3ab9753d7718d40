#include <math.h>
#include <stdio.h>
#include <string.h>

#include "barylab.h"

#define CHECK(call)                                                           \
    do {                                                                      \
        int status_ = (call);                                                 \
        if (status_ != BARYLAB_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, status_,                 \
                    barylab_last_error_message());                            \
            return 1;                                                         \
        }                                                                     \
    } while (0)

int main(void) {
    BarylabSpace *line = NULL;
    CHECK(barylab_space_from_json("{\"geometry\":\"euclidean\",\"dim\":1}", &line));

    double xs[] = {0.0, 4.0};
    double ws[] = {0.25, 0.75};
    BarylabMeasure *mu = NULL;
    CHECK(barylab_measure_new(line, xs, ws, 2, &mu));

    BarylabMap *mean = NULL;
    CHECK(barylab_map_from_json("{\"type\":\"arithmetic\"}", &mean));
    double x = 0.0;
    CHECK(barylab_map_evaluate(mean, mu, &x, 1));
    if (fabs(x - 3.0) > 1e-15) {
        fprintf(stderr, "mean = %.17g\n", x);
        return 1;
    }

    double ys[] = {1.0};
    double one[] = {1.0};
    BarylabMeasure *nu = NULL;
    CHECK(barylab_measure_new(line, ys, one, 1, &nu));
    double w1 = 0.0;
    CHECK(barylab_wasserstein(mu, nu, 1.0, &w1));
    if (fabs(w1 - 2.5) > 1e-12) {
        fprintf(stderr, "W1 = %.17g\n", w1);
        return 1;
    }

    if (barylab_measure_new(line, xs, ws, 2, NULL) != BARYLAB_ERR_NULL_POINTER) {
        return 1;
    }
    double bad[] = {0.5, 0.6};
    BarylabMeasure *unused = NULL;
    if (barylab_measure_new(line, xs, bad, 2, &unused) != BARYLAB_ERR_INPUT) {
        return 1;
    }
    if (strlen(barylab_last_error_message()) == 0) {
        return 1;
    }

    char *report = NULL;
    CHECK(barylab_run_experiment(
        "{\"kind\":\"ldp\",\"model\":{\"space\":{\"geometry\":\"euclidean\",\"dim\":1},"
        "\"atoms\":[[0.0],[1.0]],\"weights\":[0.5,0.5],\"map\":{\"type\":\"arithmetic\"}},"
        "\"event\":{\"type\":\"coordinate_at_least\",\"index\":0,\"threshold\":0.75},"
        "\"ns\":[10,20],\"grid_resolution\":40}",
        &report));
    int valid = 0;
    CHECK(barylab_verify_report(report, &valid));
    barylab_string_free(report);
    if (!valid) {
        return 1;
    }

    barylab_map_free(mean);
    barylab_measure_free(nu);
    barylab_measure_free(mu);
    barylab_space_free(line);
    printf("ok %s\n", barylab_version());
    return 0;
}
