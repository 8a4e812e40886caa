from amr_drugclass_pipeline.cli import main

main()
