//! Every Cargo example runs to completion.

macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " runs"));
        }
    };
}

example!(hard_instances, "hard_instances.rs");
example!(span_oracle, "span_oracle.rs");
example!(progress_lemma, "progress_lemma.rs");
example!(accelerated_rounds, "accelerated_rounds.rs");
example!(smoothing_nonsmooth, "smoothing_nonsmooth.rs");
example!(one_shot_averaging, "one_shot_averaging.rs");
example!(bound_curves, "bound_curves.rs");
example!(lower_bound_sweep, "lower_bound_sweep.rs");
