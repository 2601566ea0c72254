#![allow(dead_code)]

// Every example must keep running.

mod tensor_algebra {
    include!("../examples/tensor_algebra.rs");

    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod hosvd {
    include!("../examples/hosvd.rs");

    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod pseudo_inverse {
    include!("../examples/pseudo_inverse.rs");

    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod svm_clouds {
    include!("../examples/svm_clouds.rs");

    #[test]
    fn runs() {
        main().unwrap();
    }
}

mod masks_and_pgm {
    include!("../examples/masks_and_pgm.rs");

    #[test]
    fn runs() {
        let dir = tempfile::tempdir().unwrap();
        run(Some(dir.path().to_path_buf())).unwrap();
        assert!(dir.path().join("ring.pgm").exists());
    }
}

mod model_roundtrip {
    include!("../examples/model_roundtrip.rs");

    #[test]
    fn runs() {
        let dir = tempfile::tempdir().unwrap();
        run(Some(dir.path().to_path_buf())).unwrap();
        assert!(dir.path().join("model.mldf").exists());
    }
}

mod synthetic_pipeline {
    include!("../examples/synthetic_pipeline.rs");

    #[test]
    fn runs() {
        report(42).unwrap();
    }
}

mod truncation_scatter {
    include!("../examples/truncation_scatter.rs");

    #[test]
    fn runs() {
        let dir = tempfile::tempdir().unwrap();
        run(Some(dir.path().to_path_buf())).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("scatter_truncated.csv")).unwrap();
        assert!(csv.starts_with("x,y,z,label\n"));
        assert_eq!(csv.lines().count(), 241);
    }
}
