//! Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }

        #[test]
        fn $name() {
            $name::run().unwrap();
        }
    };
}

example!(kernels);
example!(gain_bounds);
example!(output_detector);
example!(uio_isolation);
example!(actuator_loss);
example!(sliding_reconstruction);
example!(runtime_monitor);
example!(certificates);
