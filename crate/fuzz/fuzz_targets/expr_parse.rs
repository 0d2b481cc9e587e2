#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok(ast) = scgame::expr::parse(src) {
            let _ = ast.eval_dual(0.5, 1.0);
            let again = scgame::expr::parse(&ast.to_string()).expect("printed expression reparses");
            let (a, b) = (ast.eval(0.5, 1.0), again.eval(0.5, 1.0));
            if let (Ok(a), Ok(b)) = (a, b) {
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }
});
